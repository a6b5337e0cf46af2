"""Edge list and update stream file parsing."""

import pytest

from wcoj.graphio import read_edges, read_updates
from wcoj.relations import SignedUpdate


def test_edge_list_roundtrip(tmp_path):
    f = tmp_path / "g.txt"
    f.write_text("# a comment\n1 6\n6 7\n\n7 1   # trailing comment\n")
    assert read_edges(str(f)) == [(1, 6), (6, 7), (7, 1)]


def test_edge_list_errors_carry_line_numbers(tmp_path):
    f = tmp_path / "g.txt"
    f.write_text("1 2\n3\n")
    with pytest.raises(ValueError, match=r"g\.txt:2"):
        read_edges(str(f))
    f.write_text("1 2\n1 x\n")
    with pytest.raises(ValueError, match=r":2.*bad vertex"):
        read_edges(str(f))
    f.write_text(f"1 {2**64}\n")
    with pytest.raises(ValueError, match="64-bit"):
        read_edges(str(f))
    f.write_text("1 -2\n")
    with pytest.raises(ValueError, match="64-bit"):
        read_edges(str(f))


def test_update_stream_batches_by_timestamp(tmp_path):
    f = tmp_path / "u.txt"
    f.write_text(
        "# stream\n+ 1 6 1\n+ 6 7 1\n- 1 6 2\n+ 7 1 3\n+ 2 8 3\n"
    )
    batches = read_updates(str(f))
    assert batches == [
        [SignedUpdate((1, 6), 1, 1), SignedUpdate((6, 7), 1, 1)],
        [SignedUpdate((1, 6), 2, -1)],
        [SignedUpdate((7, 1), 3, 1), SignedUpdate((2, 8), 3, 1)],
    ]


def test_update_stream_rejects_regressions_and_noise(tmp_path):
    f = tmp_path / "u.txt"
    f.write_text("+ 1 2 5\n+ 2 3 4\n")
    with pytest.raises(ValueError, match=r"u\.txt:2.*decreases"):
        read_updates(str(f))
    f.write_text("* 1 2 3\n")
    with pytest.raises(ValueError, match=":1"):
        read_updates(str(f))
    f.write_text("+ 1 2\n")
    with pytest.raises(ValueError, match=":1"):
        read_updates(str(f))
    f.write_text("+ 1 2 x\n")
    with pytest.raises(ValueError, match="timestamp"):
        read_updates(str(f))


def test_empty_files(tmp_path):
    f = tmp_path / "g.txt"
    f.write_text("# nothing\n")
    assert read_edges(str(f)) == []
    assert read_updates(str(f)) == []
