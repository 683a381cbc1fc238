"""Threshold and conjugation checks packaged as IdentityReports.

These complement the identity suite in ``identities``: they run the
numerical pipeline (factorization, T, Phi, Psi, the constants) and compare
against the exact cubic answers where those are known.
"""
import numpy as np

from .grid import make_grid
from .identities import IdentityReport, exact_resonance, run_suite
from .operators import build_H, build_power_nls_potential
from .projection import (conjugation_identity_residual, conjugation_kills_kernel,
                         generalized_kernel_cubic, l1_block_residual)
from .threshold import analyze_threshold, leading_coefficient, rank_one_identities

CONJUGATION_GRID = (40.0, 1024)


def _tol(tols, name, default):
    return (tols or {}).get(name, default)


def threshold_reports(V, expect=None, tol=1e-6, kink=4, tolerances=None, leading=True):
    """Reports for the threshold pipeline on V.

    ``expect`` is ``"cubic"`` (compare with the exact resonance),
    ``"Regular"`` (demand a gap ratio above 1e3) or None (classification is
    reported but not judged).
    """
    res, fp = analyze_threshold(V, tol=tol, kink=kink)
    cls = res.cls
    out = []
    if expect == "Regular":
        ok = cls.kind == "Regular"
        # residual: 1 / gap, so that a gap above 1e3 passes
        out.append(IdentityReport("threshold_regular", 1 / cls.singular_gap if ok else np.inf,
                                  _tol(tolerances, "threshold_regular", 1e-3),
                                  {"kind": cls.kind, "singular_gap": cls.singular_gap}))
    else:
        wanted = cls.kind == "Irregular" and cls.rank == 1 if expect == "cubic" else True
        out.append(IdentityReport("threshold_classification", 0.0 if wanted else 1.0, 0.0,
                                  {"kind": cls.kind, "rank": cls.rank, "singular_gap": cls.singular_gap}))
    rd = res.resonance
    if rd is None:
        return out, res, fp
    out.append(IdentityReport("resonance_equation", rd.residuals["resonance_eq"],
                              _tol(tolerances, "resonance_equation", 1e-4)))
    r1 = rank_one_identities(fp, rd, T=res.T, kink=kink)
    out.append(IdentityReport("rank_one_identities", max(r1.values()),
                              _tol(tolerances, "rank_one_identities", 1e-6), r1))
    d_rel = abs(rd.d + 2j * rd.eta * (abs(rd.c0) ** 2 + abs(rd.c1) ** 2)) / abs(rd.d)
    out.append(IdentityReport("d_equals_minus_2i_eta", d_rel, _tol(tolerances, "d_equals_minus_2i_eta", 1e-6),
                              {"d": rd.d, "eta": rd.eta}))
    if leading:
        _, rel = leading_coefficient(fp, rd, kink=kink)
        out.append(IdentityReport("m_inverse_leading_coefficient", rel,
                                  _tol(tolerances, "m_inverse_leading_coefficient", 1e-3)))
    if expect == "cubic":
        psi = rd.psi.values
        exact = exact_resonance(rd.psi.grid.x)
        align = float(np.max(np.abs(psi - exact)) / np.max(np.abs(exact)))
        out.append(IdentityReport("psi_alignment", align, _tol(tolerances, "psi_alignment", 1e-3)))
        out.append(IdentityReport("c0_equals_1", abs(rd.c0 - 1), _tol(tolerances, "c0_equals_1", 1e-3),
                                  {"c0": rd.c0}))
        out.append(IdentityReport("c1_vanishes", abs(rd.c1), _tol(tolerances, "c1_vanishes", 1e-3), {"c1": rd.c1}))
        out.append(IdentityReport("c2_vanish", max(abs(rd.c2_plus), abs(rd.c2_minus)),
                                  _tol(tolerances, "c2_vanish", 1e-6),
                                  {"c2_plus": rd.c2_plus, "c2_minus": rd.c2_minus}))
    return out, res, fp


def conjugation_reports(grid=None, tolerances=None):
    grid = make_grid(*CONJUGATION_GRID) if grid is None else grid
    H1 = build_H(build_power_nls_potential(grid, 1.0))
    basis = generalized_kernel_cubic(grid)
    kills = conjugation_kills_kernel(basis)
    return [
        IdentityReport("conjugation_identity", conjugation_identity_residual(H1, n_probes=8),
                       _tol(tolerances, "conjugation_identity", 1e-6)),
        IdentityReport("conjugation_kills_kernel", max(kills), _tol(tolerances, "conjugation_kills_kernel", 1e-6),
                       {"per_vector": kills}),
        IdentityReport("L1_block_form", l1_block_residual(H1), _tol(tolerances, "L1_block_form", 1e-8)),
    ]


def full_suite(V, cubic, tolerances=None, null_grid=None, kink=4, tol=1e-6):
    """Identity suite (cubic-only parts skipped otherwise), threshold reports and, for cubic, conjugation."""
    reports = run_suite(cubic=cubic, null_grid=null_grid)
    if tolerances:
        for r in reports:
            if r.name in tolerances:
                r.tolerance = tolerances[r.name]
    expect = "cubic" if cubic else ("Regular" if V.label.startswith("power_nls") else None)
    thr, res, fp = threshold_reports(V, expect=expect, tol=tol, kink=kink, tolerances=tolerances)
    reports += thr
    if cubic:
        reports += conjugation_reports(tolerances=tolerances)
    return reports, res
