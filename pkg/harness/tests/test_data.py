"""Tests for the oracle CSV interface: fetching, parsing, and tokenizing."""

import subprocess

import numpy as np
import pytest

from bplab_harness.data import (
    ORACLE_HEADER,
    DatasetError,
    encode_chain_tokens,
    fetch_oracle_csv,
    load_oracle_rows,
    make_dataset,
)


def rows_text(rows):
    return ORACLE_HEADER + "\n" + "\n".join(rows) + "\n"


class TestFetch:
    def test_fetch_is_deterministic_in_the_seed(self):
        a = fetch_oracle_csv(5, seed=42)
        b = fetch_oracle_csv(5, seed=42)
        assert a == b
        assert a.splitlines()[0] == ORACLE_HEADER
        assert len(a.splitlines()) == 6

    def test_missing_executable_is_a_dataset_error(self):
        with pytest.raises(DatasetError, match="not found"):
            fetch_oracle_csv(3, seed=0, executable="no-such-oracle-binary")

    def test_failing_run_reports_stderr(self):
        with pytest.raises(DatasetError, match="exit"):
            fetch_oracle_csv(0, seed=0)  # zero instances is invalid upstream


class TestOracleContract:
    """The cross-component contract: rows must equal exact enumeration."""

    def test_posteriors_recompute_from_the_tables(self):
        tables, posteriors = load_oracle_rows(fetch_oracle_csv(50, seed=7))
        f00, f01, f10, f11 = tables.T
        z = f00 + f01 + f10 + f11
        np.testing.assert_allclose(posteriors[:, 0], (f10 + f11) / z,
                                   rtol=0, atol=1e-9)
        np.testing.assert_allclose(posteriors[:, 1], (f01 + f11) / z,
                                   rtol=0, atol=1e-9)

    def test_worked_example_table(self):
        # table (1, 2, 3, 4) has posteriors (0.7, 0.6); ask the companion
        # CLI for that graph's marginals through its other front door
        graph_text = "vars 2\nfactor 0 1 1.0 2.0 3.0 4.0\n"
        proc = subprocess.run(["bplab", "oracle"], input=graph_text,
                              capture_output=True, text=True, check=True)
        lines = proc.stdout.splitlines()
        assert lines[1] == "0,0.7"
        assert lines[2] == "1,0.6"

    def test_uniform_table_is_maximally_uncertain(self):
        graph_text = "vars 2\nfactor 0 1 1.0 1.0 1.0 1.0\n"
        proc = subprocess.run(["bplab", "oracle"], input=graph_text,
                              capture_output=True, text=True, check=True)
        lines = proc.stdout.splitlines()
        assert lines[1] == "0,0.5"
        assert lines[2] == "1,0.5"


class TestParsing:
    def test_round_trip_of_a_valid_text(self):
        text = rows_text(["0.5,0.25,0.125,1.0,0.6,0.666666"])
        tables, posteriors = load_oracle_rows(text)
        np.testing.assert_array_equal(tables[0], [0.5, 0.25, 0.125, 1.0])
        np.testing.assert_array_equal(posteriors[0], [0.6, 0.666666])

    @pytest.mark.parametrize("bad,fragment", [
        ("", "empty"),
        ("a,b,c\n1,2,3\n", "header"),
        (rows_text(["1,2,3"]), "6 fields"),
        (rows_text(["1,2,3,4,x,0.5"]), "non-numeric"),
        (rows_text(["1,2,3,4,1.5,0.5"]), "outside"),
        (rows_text(["1,2,3,4,0.0,0.5"]), "outside"),
        (rows_text(["0,2,3,4,0.5,0.5"]), "non-positive"),
    ])
    def test_malformed_text_is_rejected_with_a_reason(self, bad, fragment):
        with pytest.raises(DatasetError, match=fragment):
            load_oracle_rows(bad)


class TestTokenization:
    def test_layout_of_the_two_tokens(self):
        table = np.array([0.2, 0.4, 0.6, 0.8], dtype=np.float32)
        x = encode_chain_tokens(table[np.newaxis])
        assert x.shape == (1, 2, 8)
        assert x.dtype == np.float32
        np.testing.assert_array_equal(x[0, 0, 1:5], table)
        np.testing.assert_array_equal(x[0, 1, 1:5], table)
        np.testing.assert_array_equal(x[:, :, 0], 0.5)   # initial belief
        np.testing.assert_array_equal(x[:, :, 5], 0.0)   # variable node type
        np.testing.assert_array_equal(x[0, :, 6], [0, 1])  # own indices
        np.testing.assert_array_equal(x[0, :, 7], [1, 0])  # gathered neighbour

    def test_shape_validation(self):
        with pytest.raises(DatasetError):
            encode_chain_tokens(np.zeros((3, 5)))


class TestMakeDataset:
    def test_split_sizes_follow_the_fraction(self):
        ds = make_dataset(200, seed=1)
        assert (ds.train_count, ds.val_count) == (180, 20)
        assert ds.train[0].shape == (180, 4)
        assert ds.val[1].shape == (20, 2)

    def test_csv_text_shortcut_skips_the_executable(self):
        text = rows_text(["1.0,1.0,1.0,1.0,0.5,0.5",
                          "1.0,2.0,3.0,4.0,0.7,0.6"])
        ds = make_dataset(2, seed=0, val_fraction=0.5, csv_text=text)
        np.testing.assert_array_equal(ds.val[1], [[0.7, 0.6]])

    def test_count_mismatch_is_rejected(self):
        text = rows_text(["1.0,1.0,1.0,1.0,0.5,0.5"])
        with pytest.raises(DatasetError, match="holds"):
            make_dataset(5, seed=0, csv_text=text)

    def test_validation_of_count_and_fraction(self):
        with pytest.raises(DatasetError):
            make_dataset(1, seed=0)
        with pytest.raises(DatasetError):
            make_dataset(100, seed=0, val_fraction=0.0)
