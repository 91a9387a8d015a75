import pytest

from provet.datapath import WideWord
from provet.errors import AddressOutOfRange, WidthMismatch
from provet.memimage import (
    MemoryLayout,
    TensorLayout,
    build_image,
    image_bytes,
    image_from_bytes,
    load_memory,
    read_tensor,
    save_memory,
)


def layout(cfg):
    return MemoryLayout(
        cfg.sram_depth_words,
        cfg.fingerprint(),
        {
            "a": TensorLayout("a", (2, 3), ((0, 0), (0, 16))),
            "b": TensorLayout("b", (1, 4), ((5, 60),)),
        },
    )


def test_build_and_read(cfg16):
    lay = layout(cfg16)
    lay.check(cfg16)
    words = build_image(cfg16, lay, {"a": [[1, 2, 3], [4, 5, 6]], "b": [[-1, -2, -3, -4]]})
    assert words[0].ops[:3] == (1, 2, 3) and words[0].ops[16:19] == (4, 5, 6)
    assert read_tensor(words, lay.tensors["b"]) == [[-1, -2, -3, -4]]
    assert lay.words_used() == 6


def test_bytes_round_trip(cfg16):
    words = [WideWord.from_operands([(i * 7 + a) % 256 - 128 for i in range(64)], cfg16) for a in range(32)]
    assert image_from_bytes(image_bytes(words), cfg16) == words
    with pytest.raises(WidthMismatch):
        image_from_bytes(b"\x00" * 10, cfg16)


def test_save_and_load(tmp_path, cfg16):
    lay = layout(cfg16)
    words = build_image(cfg16, lay, {"a": [[1, 2, 3], [4, 5, 6]]})
    path = save_memory(tmp_path, words, lay)
    again, lay2 = load_memory(path, cfg16)
    assert again == words
    assert lay2 == lay
    assert (tmp_path / "memory.bin").stat().st_size == 32 * 64


def test_layout_checks(cfg16):
    bad = MemoryLayout(32, "", {"x": TensorLayout("x", (1, 4), ((0, 62),))})
    with pytest.raises(WidthMismatch):
        bad.check(cfg16)
    clash = MemoryLayout(
        32, "", {"x": TensorLayout("x", (1, 4), ((0, 0),)), "y": TensorLayout("y", (1, 4), ((0, 3),))}
    )
    with pytest.raises(WidthMismatch):
        clash.check(cfg16)
    deep = MemoryLayout(32, "", {"x": TensorLayout("x", (1, 4), ((40, 0),))})
    with pytest.raises(AddressOutOfRange):
        deep.check(cfg16)
    with pytest.raises(WidthMismatch):
        TensorLayout("x", (2, 4), ((0, 0),))
    with pytest.raises(ValueError):
        MemoryLayout.from_dict({"format": "nope"})


def test_data_shape_checked(cfg16):
    with pytest.raises(WidthMismatch):
        build_image(cfg16, layout(cfg16), {"a": [[1, 2], [3, 4]]})
