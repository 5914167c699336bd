import csv

from scanwait import bench, experiments as ex


def small_grid():
    out = []
    for label, cfg in bench.default_grid(gbar1_db=(0.0, 7.5, 15.0)):
        if label in ("L2_m1", "L3_m2"):
            out.append((label, cfg))
    return out


def test_convergence_study(tmp_path):
    recs = bench.run_convergence_study(small_grid(), out_dir=tmp_path)
    with open(tmp_path / "convergence.csv") as fh:
        table = list(csv.DictReader(fh))
    assert len(table) == len(recs) == 2 * 2 * 3 * 3 * 2
    by = {}
    for r in recs:
        by[(r.operation, r.column, r.rho, r.gbar1_db, r.tol)] = r.nmin
    for (op, col, rho, g, tol), n in by.items():
        if tol != bench.TOLS[-1]:
            tighter = bench.TOLS[bench.TOLS.index(tol) + 1]
            assert by[(op, col, rho, g, tighter)] >= n
        if rho == ex.IID_RHO and tol == 1e-6:
            assert n <= 2
    # fewer terms at higher average SNR
    for op in ("anpe_awt", "swc_pe"):
        for col in ("L2_m1", "L3_m2"):
            counts = [by[(op, col, ex.CORRELATED, g, 1e-6)] for g in (0.0, 7.5, 15.0)]
            assert counts == sorted(counts, reverse=True)
