import pytest


@pytest.fixture(scope="session")
def run_dirs(tmp_path_factory):
    """CSV outputs produced by the upstream CLI, one directory per kind."""
    from jointsparse import cli

    base = tmp_path_factory.mktemp("runs")
    dirs = {
        "deblur": base / "deblur",
        "success": base / "success",
        "phase": base / "phase",
        "mri": base / "mri",
    }
    jobs = [
        ["deblur", "--n", "24", "--L", "2", "--algs", "ias,mmv-ias",
         "--samples", "300", "--seed", "0", "--outdir", str(dirs["deblur"])],
        ["success", "--N", "24", "--s", "3", "--T", "2", "--L", "2,4",
         "--M", "8,16,22", "--algs", "ias,mmv-ias", "--seed", "0",
         "--outdir", str(dirs["success"])],
        ["phase", "--N", "12", "--stride", "6", "--T", "1", "--L", "2",
         "--seed", "0", "--outdir", str(dirs["phase"])],
        ["mri", "--n", "16", "--lines", "6", "--L", "2",
         "--algs", "ls,mmv-ias", "--seed", "0", "--outdir", str(dirs["mri"])],
    ]
    for argv in jobs:
        assert cli.main(argv) == 0, argv
    return dirs
