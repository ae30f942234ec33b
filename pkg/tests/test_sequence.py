import numpy as np
import pytest
from hypothesis import given, strategies as st

from rlprng import sequence as S


def test_encoding_examples():
    assert S.bits_to_str(S.to_bits([0])) == "00000000"
    assert S.bits_to_str(S.to_bits([-1])) == "11111111"
    assert S.to_decimal("00000001").tolist() == [1]
    assert S.to_decimal("10000000").tolist() == [-128]


def test_table_row_image_round_trip():
    row = [-10, -112, 68]
    bits = S.to_bits(row)
    assert S.bits_to_str(bits) == "111101101001000001000100"
    assert S.to_decimal(bits).tolist() == row


def test_every_byte_round_trips():
    vals = np.arange(-128, 128)
    assert np.array_equal(S.to_decimal(S.to_bits(vals)), vals)


@given(st.lists(st.integers(0, 1), min_size=80, max_size=80))
def test_any_80_bit_string_round_trips(bits):
    vals = S.to_decimal(bits)
    assert vals.size == 10
    assert np.array_equal(S.to_bits(vals), np.array(bits, dtype=np.uint8))


@given(st.integers(1, 16), st.data())
def test_round_trip_any_width(m, data):
    lo, hi = S.value_range(m)
    vals = data.draw(st.lists(st.integers(lo, hi), max_size=20))
    assert S.to_decimal(S.to_bits(vals, m), m).tolist() == vals


def test_out_of_range_names_index():
    with pytest.raises(S.SequenceError, match="index 1"):
        S.to_bits([0, 128, 3])


def test_length_not_divisible():
    with pytest.raises(S.SequenceError, match="not divisible"):
        S.to_decimal("0101010", 8)


def test_concat():
    assert S.concat([]).size == 0
    assert S.bits_to_str(S.concat(["01", "10"])) == "0110"
    period = np.random.default_rng(0).integers(0, 2, 80)
    assert S.concat([period] * 7).size == 560


def test_as_bits_rejects_garbage():
    with pytest.raises(S.SequenceError):
        S.as_bits([0, 2, 1])
    with pytest.raises(S.SequenceError):
        S.as_bits("01a")
    with pytest.raises(S.SequenceError):
        S.as_bits(np.zeros((2, 2)))


def test_read_examples(tmp_path):
    f = tmp_path / "a.txt"
    f.write_text("01\n10\n")
    assert [S.bits_to_str(s) for s in S.read_sequences(f)] == ["01", "10"]
    e = tmp_path / "e.txt"
    e.write_text("")
    assert S.read_sequences(e) == []


def test_read_reports_line_and_character(tmp_path):
    f = tmp_path / "bad.txt"
    f.write_text("0101\n01x1\n")
    with pytest.raises(S.SequenceError, match=r"bad.txt:2: .*'x'"):
        S.read_sequences(f)


@given(st.lists(st.text("01", max_size=100), max_size=10))
def test_write_read_byte_identical(tmp_path_factory, lines):
    d = tmp_path_factory.mktemp("rt")
    f = d / "seq.txt"
    canonical = "".join(line + "\n" for line in lines).encode()
    f.write_bytes(canonical)
    out = d / "out.txt"
    S.write_sequences(out, S.read_sequences(f))
    assert out.read_bytes() == canonical


def test_decimal_csv_round_trip(tmp_path):
    rows = [np.array([22, -113, 34]), np.array([-1, 0, 127])]
    f = tmp_path / "d.csv"
    S.write_decimal_csv(f, rows)
    assert f.read_text() == "22,-113,34\n-1,0,127\n"
    back = S.read_decimal_csv(f)
    assert [r.tolist() for r in back] == [r.tolist() for r in rows]
