import numpy as np
import pytest

from bernoulli_sieve.exact import Pmf
from bernoulli_sieve.storage import (
    build_output_path,
    header_lines,
    model_token,
    read_header,
    render_pmf,
    render_samples,
    write_atomic,
)


def test_model_token():
    assert model_token("beta:2,3") == "beta_2-3"
    assert model_token(" gem:1 ") == "gem_1"


def test_build_output_path(tmp_path):
    path = build_output_path("simulate", "beta:2,3", "kstar,k0", base=tmp_path)
    assert path == tmp_path / "simulate" / "beta_2-3" / "kstar-k0.csv"
    assert build_output_path("limit", "gem:1", "k0", fmt="report", base=tmp_path).suffix == ".txt"


def test_write_atomic_replaces(tmp_path):
    target = tmp_path / "nested" / "out.csv"
    write_atomic(target, "a\n")
    write_atomic(target, "b\n")
    assert target.read_text(encoding="utf-8") == "b\n"
    assert not (tmp_path / "nested" / "out.csv.part").exists()


def test_write_atomic_cleans_up_on_failure(tmp_path):
    target = tmp_path / "out.csv"
    with pytest.raises(TypeError):
        write_atomic(target, None)
    assert not target.exists()
    assert not (tmp_path / "out.csv.part").exists()


def test_render_and_read_header(tmp_path):
    head = header_lines('{"command":"simulate"}', 7)
    text = render_samples({"k": np.array([1, 2]), "kstar": np.array([3, 4])}, head)
    path = tmp_path / "s.csv"
    write_atomic(path, text)
    header = read_header(path)
    assert header["seed"] == "7"
    assert header["config"] == '{"command":"simulate"}'
    assert text.splitlines()[-2:] == ["1,3", "2,4"]


def test_render_pmf_reports_deficit():
    text = render_pmf(Pmf.from_probs(1, np.array([0.5, 0.25])), header_lines("{}", None))
    assert text.splitlines()[-1] == "# mass_deficit=0.25"
    assert "1,0.5" in text
