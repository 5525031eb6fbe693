"""Secondary acceptance check: every figure kind renders from the upstream
CLI's CSV outputs, and a header-mangled CSV fails with a diagnostic that
names the missing column. Run with -s to see the checklist lines.
"""
import pytest

from plotkit import MissingColumn, render

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def report(ok, label):
    print(f"[{'PASS' if ok else 'FAIL'}] {label}", flush=True)
    assert ok, label


def test_all_seven_kinds_render_from_upstream_csvs(run_dirs, tmp_path):
    jobs = [
        ("signal-overlay", [run_dirs["deblur"] / "signals.csv"]),
        ("theta-profile", [run_dirs["deblur"] / "thetas.csv"]),
        ("ci-ribbon", [run_dirs["deblur"] / "credible_intervals.csv"]),
        ("error-curve", [run_dirs["mri"] / "mri_errors.csv"]),
        ("esp-curve", [run_dirs["success"] / "success.csv"]),
        ("phase-heatmap", [run_dirs["phase"] / "phase_mmv_ias_L2.csv"]),
        ("image-grid", sorted(run_dirs["mri"].glob("image_*.csv"))),
    ]
    rendered = []
    for kind, inputs in jobs:
        out = render(kind, inputs, tmp_path / f"{kind}.png")
        if out.read_bytes()[:8] == PNG_MAGIC:
            rendered.append(kind)
    report(
        len(rendered) == 7,
        f"all seven figure kinds render from CLI-generated CSVs "
        f"({', '.join(rendered)})",
    )


def test_header_mangling_yields_named_column_diagnostic(run_dirs, tmp_path):
    src = (run_dirs["success"] / "success.csv").read_text().splitlines()
    src[0] = src[0].replace("esp", "probability").replace("M", "count")
    bad = tmp_path / "mangled_success.csv"
    bad.write_text("\n".join(src) + "\n")
    with pytest.raises(MissingColumn) as exc:
        render("esp-curve", [bad], tmp_path / "x.png")
    msg = str(exc.value)
    named = "M" in msg.split("found columns")[0] and "esp" in msg
    report(
        named and "mangled_success.csv" in msg,
        f"header-mangled CSV fails with a named-column diagnostic ({msg!r})",
    )
