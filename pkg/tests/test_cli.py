import numpy as np
import pytest

from conftest import harmonic_signal, white_noise

from harmonmf.cli import CliError, main, parse_config_file
from harmonmf.dictionary import load_noise_shapes
from harmonmf.signal_io import read_wav, write_wav

SMALL = """
L = 3
m = 1
p_star = 6
r = 2
m_n = 2
iterations = 2
seed = 0
"""


@pytest.fixture
def workdir(tmp_path):
    write_wav(harmonic_signal(seconds=1.0), tmp_path / "clean.wav")
    write_wav(white_noise(seconds=3.0, seed=7), tmp_path / "noise.wav")
    (tmp_path / "small.cfg").write_text(SMALL)
    return tmp_path


def run_train(workdir):
    rc = main(["train-noise", str(workdir / "noise.wav"),
               str(workdir / "shapes.nshp"),
               "--config", str(workdir / "small.cfg")])
    assert rc == 0
    return workdir / "shapes.nshp"


def test_train_noise_writes_shapes(workdir, capsys):
    path = run_train(workdir)
    shapes = load_noise_shapes(path)
    assert shapes.n_matrix.shape == (129, 2)
    assert "KL" in capsys.readouterr().out


def test_train_noise_full_r16_header(tmp_path):
    write_wav(white_noise(seconds=10.0, seed=1), tmp_path / "n.wav")
    rc = main(["train-noise", str(tmp_path / "n.wav"), str(tmp_path / "s.nshp")])
    assert rc == 0
    shapes = load_noise_shapes(tmp_path / "s.nshp")
    assert shapes.n_matrix.shape == (129, 16)


def test_train_noise_deterministic(workdir):
    a = run_train(workdir).read_bytes()
    b = run_train(workdir).read_bytes()
    assert a == b


def test_train_noise_too_short(tmp_path, capsys):
    write_wav(white_noise(seconds=1.0, seed=2), tmp_path / "short.wav")
    rc = main(["train-noise", str(tmp_path / "short.wav"),
               str(tmp_path / "s.nshp")])
    assert rc == 1
    assert "too short" in capsys.readouterr().err
    assert not (tmp_path / "s.nshp").exists()


def test_enhance_command(workdir):
    shapes = run_train(workdir)
    out = workdir / "out.wav"
    rc = main(["enhance", str(workdir / "clean.wav"), str(shapes), str(out),
               "--config", str(workdir / "small.cfg")])
    assert rc == 0
    result = read_wav(out)
    assert len(result) == len(read_wav(workdir / "clean.wav"))


def test_enhance_byte_identical_reruns(workdir):
    shapes = run_train(workdir)
    args = ["enhance", str(workdir / "clean.wav"), str(shapes),
            str(workdir / "out.wav"), "--config", str(workdir / "small.cfg")]
    assert main(args) == 0
    first = (workdir / "out.wav").read_bytes()
    assert main(args) == 0
    assert (workdir / "out.wav").read_bytes() == first


def test_enhance_modes_differ(workdir):
    shapes = run_train(workdir)
    base = ["enhance", str(workdir / "clean.wav"), str(shapes)]
    cfg = ["--config", str(workdir / "small.cfg")]
    assert main(base + [str(workdir / "lin.wav")] + cfg + ["--mode", "lin"]) == 0
    assert main(base + [str(workdir / "dense.wav")] + cfg + ["--mode", "dense"]) == 0
    assert (workdir / "lin.wav").read_bytes() != \
        (workdir / "dense.wav").read_bytes()


def test_enhance_dump_diagnostics(workdir):
    shapes = run_train(workdir)
    out = workdir / "out.wav"
    rc = main(["enhance", str(workdir / "clean.wav"), str(shapes), str(out),
               "--config", str(workdir / "small.cfg"), "--dump-diagnostics"])
    assert rc == 0
    trace = (workdir / "out_trace.csv").read_text().splitlines()
    assert trace[0] == "iteration,kl,sparsity_term,density_term,total"
    assert len(trace) == 2 + 2  # header + initial + 2 iterations
    assert (workdir / "out_speech.pgm").exists()
    assert (workdir / "out_speech.csv").exists()


def test_evaluate_rows(workdir, capsys):
    shapes = run_train(workdir)
    capsys.readouterr()  # drop train-noise output
    rc = main(["evaluate", str(workdir / "clean.wav"), str(workdir / "noise.wav"),
               str(shapes), "--config", str(workdir / "small.cfg"),
               "--snr-list", "0,5", "--free-atoms", "3", "--oracle-atoms", "3"])
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "method,input_snr_db,output_snr_db"
    assert len(lines) == 1 + 2 * 4
    for line in lines[1:]:
        method, snr_in, snr_out = line.split(",")
        assert method in ("lin", "dense", "plain", "oracle")
        assert np.isfinite(float(snr_out))


def test_evaluate_empty_list(workdir, capsys):
    shapes = run_train(workdir)
    capsys.readouterr()  # drop train-noise output
    rc = main(["evaluate", str(workdir / "clean.wav"), str(workdir / "noise.wav"),
               str(shapes), "--config", str(workdir / "small.cfg"),
               "--snr-list", ""])
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines == ["method,input_snr_db,output_snr_db"]


def test_sweep_rows(workdir):
    shapes = run_train(workdir)
    out = workdir / "sweep.csv"
    rc = main(["sweep", str(workdir / "clean.wav"), str(workdir / "noise.wav"),
               str(shapes), str(out), "--config", str(workdir / "small.cfg"),
               "--L-list", "2,4", "--lambda-list", "0.2,1.0", "--m", "1"])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "L,lambda_s,total_atoms,output_snr_db"
    assert len(lines) == 5
    lams = [float(l.split(",")[1]) for l in lines[1:]]
    assert lams == [0.2, 1.0, 0.2, 1.0]


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("frobnicate = 3\n")
    with pytest.raises(CliError, match="unknown key"):
        parse_config_file(cfg)


def test_config_parsing(tmp_path):
    cfg = tmp_path / "ok.cfg"
    cfg.write_text("# comment\nL = 7  # inline\nlambda_s = 0.5\nmode = lin\n"
                   "noise_wav = /x/y.wav\n")
    values = parse_config_file(cfg)
    assert values == {"L": 7, "lambda_s": 0.5, "mode": "lin",
                      "noise_wav": "/x/y.wav"}


def test_flag_overrides_config(workdir):
    shapes = run_train(workdir)
    out1, out2 = workdir / "s1.wav", workdir / "s2.wav"
    base = ["enhance", str(workdir / "clean.wav"), str(shapes)]
    cfg = ["--config", str(workdir / "small.cfg")]
    assert main(base + [str(out1)] + cfg) == 0
    assert main(base + [str(out2)] + cfg + ["--seed", "99"]) == 0
    assert out1.read_bytes() != out2.read_bytes()


def test_missing_path_is_clean_error(capsys):
    rc = main(["enhance"])
    assert rc == 1
    err = capsys.readouterr().err
    assert err.startswith("error:") and len(err.strip().splitlines()) == 1
