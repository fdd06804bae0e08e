"""Acceptance suite: one criterion per test, one printed verdict line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""

import math
import time

import numpy as np
import pytest

from mmct import coding, modem
from mmct.capacity_outage import (
    RateTargets,
    Scheme,
    outage_closed_mmct_h,
    outage_closed_nr,
    outage_curves,
    outage_numeric,
    outage_thresholds,
    rate_mmct,
    rate_nr,
)
from mmct.cli import main as cli_main
from mmct.frame_mapper import (
    MapperConfig,
    RbBlock,
    SnrMap,
    StreamTag,
    apply_permutation,
    build_permutation,
    demap,
    identity_permutations,
    map_layers,
    rb_counts,
)
from mmct.mimo_channel import CorrelationModel, eigenvalue_covariance_check, svd_precode
from mmct.phy_link import (
    MCS_TABLE,
    LinkScenario,
    SchemeId,
    crossing_snr,
    gain_report,
    run_reference_schemes,
    run_scenario,
)


def _verdict(name: str, failures: list[str], detail: str = "") -> None:
    status = "PASS" if not failures else "FAIL"
    line = f"{status} {name}"
    if detail:
        line += f" [{detail}]"
    if failures:
        line += " — " + "; ".join(failures)
    print(line)
    assert not failures, line


def _check(failures: list[str], ok: bool, message: str) -> None:
    if not ok:
        failures.append(message)


FIG_TARGETS = RateTargets.fair_split(
    nr_rate=12.0, rbs_per_layer=20, shared_haptic_rbs=2, layers=2, tx_antennas=64
)


def test_criterion_1_outage_reproduction():
    """Analytic outage lineup: thresholds, closed-vs-numeric, video ordering."""
    failures: list[str] = []
    started = time.monotonic()
    m = 100_000
    th = outage_thresholds(FIG_TARGETS)

    _check(
        failures,
        abs(th["mmct_h_zero_db"] - 10 * math.log10(63.0)) <= 0.05,
        f"haptic zero-outage threshold {th['mmct_h_zero_db']:.4f} dB != 17.99 +- 0.05",
    )
    _check(
        failures,
        abs(th["nr_zero_db"] - 10 * math.log10(4095.0 / 2.0)) <= 0.05,
        f"joint zero-outage threshold {th['nr_zero_db']:.4f} dB != 33.11 +- 0.05",
    )
    # the numeric estimator agrees with both thresholds to within 0.05 dB
    n_t = FIG_TARGETS.tx_antennas
    for scheme, key in ((Scheme.MMCT_H, "mmct_h_zero_db"), (Scheme.NR, "nr_zero_db")):
        below = outage_numeric(scheme, FIG_TARGETS, 10 ** ((th[key] - 0.05) / 10) / n_t, m)
        above = outage_numeric(scheme, FIG_TARGETS, 10 ** ((th[key] + 0.05) / 10) / n_t, m)
        _check(failures, below > 0.0, f"{scheme.value} numeric outage 0 below threshold")
        _check(failures, above == 0.0, f"{scheme.value} numeric outage > 0 above threshold")

    grid_db = np.arange(0.0, 36.25, 0.25)
    curves = {(c.scheme, c.method): c for c in outage_curves(FIG_TARGETS, grid_db, m)}
    gap_h = np.max(
        np.abs(
            curves[(Scheme.MMCT_H, "closed")].p_out
            - curves[(Scheme.MMCT_H, "numeric")].p_out
        )
    )
    snr_lin = 10 ** (grid_db / 10) / n_t
    gap_nr = np.max(
        np.abs(outage_closed_nr(FIG_TARGETS, snr_lin) - curves[(Scheme.NR, "numeric")].p_out)
    )
    _check(failures, gap_h <= 2.0 / m, f"haptic closed/numeric gap {gap_h:.2e} > 2e-5")
    _check(failures, gap_nr <= 2.0 / m, f"joint closed/numeric gap {gap_nr:.2e} > 2e-5")

    video = curves[(Scheme.MMCT_V, "numeric")].p_out
    joint = curves[(Scheme.NR, "numeric")].p_out
    _check(failures, bool(np.all(video >= joint)), "video outage not >= joint outage pointwise")

    runtime = time.monotonic() - started
    _check(failures, runtime < 10.0, f"runtime {runtime:.1f}s >= 10s")
    _verdict(
        "criterion-1 outage-lineup-reproduction",
        failures,
        f"gaps {gap_h:.1e}/{gap_nr:.1e}, runtime {runtime:.1f}s",
    )


def test_criterion_2_haptic_spot_value():
    """Closed-form haptic outage at normalized SNR 42 equals 1/3."""
    failures: list[str] = []
    p = outage_closed_mmct_h(FIG_TARGETS, 42.0 / FIG_TARGETS.tx_antennas)
    _check(failures, abs(p - 1.0 / 3.0) <= 1e-5, f"p_out {p!r} != 1/3 +- 1e-5")
    _verdict("criterion-2 haptic-spot-value", failures, f"p_out={p:.9f}")


def test_criterion_3_rate_conservation():
    """Split rates add up to the joint rate across 1e5 eigenvalue pairs."""
    failures: list[str] = []
    rng = np.random.default_rng(2026)
    lam = rng.exponential(100.0, size=(100_000, 2))
    l1, l2 = lam.max(axis=1), lam.min(axis=1)
    r_h, r_v = rate_mmct(l1, l2, 20, 2)
    worst = float(np.max(np.abs(r_h + r_v - rate_nr(l1, l2))))
    _check(failures, worst <= 1e-12, f"worst conservation error {worst:.2e} > 1e-12")
    _verdict("criterion-3 rate-conservation", failures, f"max |r_h+r_v-r_joint|={worst:.2e}")


def test_criterion_4_frame_mapper_exhaustive():
    """Round trip + top-SNR placement for every config with B<=6, L<=3."""
    failures: list[str] = []
    started = time.monotonic()
    rng = np.random.default_rng(7)
    configs = 0
    for layers in (1, 2, 3):
        for haptic_layers in range(1, layers + 1):
            for rbs in range(1, 7):
                for shared in range(0, rbs + 1):
                    cfg = MapperConfig(
                        layers=layers,
                        haptic_layers=haptic_layers,
                        rbs_per_layer=rbs,
                        shared_haptic_rbs=shared,
                        subcarriers=2,
                        ofdm_symbols=2,
                    )
                    configs += 1
                    hap = [
                        RbBlock(np.full((2, 2), 1000 + i), StreamTag.HAPTIC)
                        for i in range(cfg.haptic_rb_count)
                    ]
                    vid = [
                        RbBlock(np.full((2, 2), 2000 + i), StreamTag.VIDEO)
                        for i in range(cfg.video_rb_count)
                    ]
                    snr = SnrMap(rng.uniform(0.1, 10.0, (rbs, layers)))
                    perms = [
                        build_permutation(snr, lay, cfg) for lay in range(1, layers + 1)
                    ]
                    grid = apply_permutation(map_layers(hap, vid, cfg), perms)
                    hap2, vid2 = demap(grid, perms, cfg)
                    round_trip = all(
                        np.array_equal(a.symbols, b.symbols) for a, b in zip(hap, hap2)
                    ) and all(np.array_equal(a.symbols, b.symbols) for a, b in zip(vid, vid2))
                    _check(failures, round_trip, f"round trip failed for {cfg}")
                    if 1 <= shared < rbs:
                        col = cfg.shared_layer - 1
                        hap_rows = {
                            r
                            for r in range(rbs)
                            if grid.blocks[r][col].stream_tag is StreamTag.HAPTIC
                        }
                        best = set(
                            np.argsort(-snr.values[:, col], kind="stable")[:shared].tolist()
                        )
                        _check(
                            failures, hap_rows == best, f"haptic rows not top-SNR for {cfg}"
                        )

    # the worked shared-layer example, block for block
    cfg = MapperConfig(
        layers=2, haptic_layers=1, rbs_per_layer=8, shared_haptic_rbs=3,
        subcarriers=2, ofdm_symbols=2,
    )
    hap = [RbBlock(np.full((2, 2), 100 + i), StreamTag.HAPTIC) for i in range(3)]
    vid = [RbBlock(np.full((2, 2), 200 + i), StreamTag.VIDEO) for i in range(13)]
    snr = np.ones((8, 2))
    snr[:, 0] = [9.0, 1.0, 2.0, 3.0, 8.0, 7.0, 4.0, 5.0]  # best rows {0, 4, 5}
    perms = identity_permutations(cfg)
    perms[0] = build_permutation(SnrMap(snr), 1, cfg)
    grid = apply_permutation(map_layers(hap, vid, cfg), perms)
    got = [int(b.symbols[0, 0].real) for b in grid.column(1)]
    want = [100, 200, 201, 202, 101, 102, 203, 204]
    _check(failures, got == want, f"worked example column {got} != {want}")

    runtime = time.monotonic() - started
    _check(failures, runtime < 5.0, f"runtime {runtime:.1f}s >= 5s")
    _verdict(
        "criterion-4 frame-mapper-exhaustive",
        failures,
        f"{configs} configs, runtime {runtime:.1f}s",
    )


def test_criterion_5_svd_properties():
    """Reconstruction, precoder norms, ordering over 1e4 random channels."""
    failures: list[str] = []
    rng = np.random.default_rng(11)
    worst_recon, worst_norm = 0.0, 0.0
    for _ in range(10_000):
        h = (rng.standard_normal((2, 8)) + 1j * rng.standard_normal((2, 8))) / math.sqrt(2)
        factors, precoder = svd_precode(h, 2)
        recon = (factors.u[:, :2] * factors.sigma) @ factors.v[:, :2].conj().T
        worst_recon = max(
            worst_recon, float(np.linalg.norm(recon - h) / np.linalg.norm(h))
        )
        norms = np.linalg.norm(precoder.matrix, axis=0)
        worst_norm = max(worst_norm, float(np.max(np.abs(norms - 1 / math.sqrt(2)))))
        if np.any(np.diff(factors.sigma) > 0):
            failures.append("singular values not descending")
            break
    _check(failures, worst_recon <= 1e-10, f"worst reconstruction {worst_recon:.2e} > 1e-10")
    _check(failures, worst_norm <= 1e-12, f"worst precoder norm error {worst_norm:.2e} > 1e-12")
    _verdict(
        "criterion-5 svd-properties",
        failures,
        f"worst recon {worst_recon:.1e}, worst norm err {worst_norm:.1e}",
    )


def test_criterion_6_eigenvalue_statistics():
    """Fluctuation variances within 20% of the covariance model."""
    failures: list[str] = []
    started = time.monotonic()
    details = []
    for theta in (0.0, math.pi / 3, math.pi / 2):
        rep = eigenvalue_covariance_check(
            CorrelationModel.from_angle(theta), 64, 100_000, 2026
        )
        for i in range(2):
            if rep.var_predicted[i] == 0.0:
                _check(
                    failures,
                    rep.var_empirical[i] <= 1e-9,
                    f"theta={theta:.3f}: zero-model variance {rep.var_empirical[i]:.2e}",
                )
            else:
                ratio = rep.ratio[i]
                details.append(f"{ratio:.3f}")
                _check(
                    failures,
                    0.8 <= ratio <= 1.2,
                    f"theta={theta:.3f} eigenvalue {i + 1}: ratio {ratio:.3f} outside +-20%",
                )
    runtime = time.monotonic() - started
    _check(failures, runtime < 60.0, f"runtime {runtime:.1f}s >= 60s")
    _verdict(
        "criterion-6 eigenvalue-statistics",
        failures,
        f"ratios {', '.join(details)}, runtime {runtime:.1f}s",
    )


@pytest.fixture(scope="module")
def link_results():
    mapper = MapperConfig(layers=2, haptic_layers=1, rbs_per_layer=20, shared_haptic_rbs=4)
    started = time.monotonic()
    results = run_reference_schemes(
        mapper=mapper,
        mcs=MCS_TABLE[25],
        low_mcs=MCS_TABLE[17],
        snr_grid_db=tuple(float(x) for x in range(12, 73, 4)),
        trials_per_point=150,
        rng_seed=2026,
    )
    return results, time.monotonic() - started


def test_criterion_7_link_level_properties(link_results):
    """Reduced-trial Monte-Carlo ordering and gap properties."""
    failures: list[str] = []
    results, runtime = link_results
    started = time.monotonic()
    trials = 150

    def sigma(p):
        return np.sqrt(np.clip(p * (1.0 - p), 0.0, 1.0) / trials)

    # (a) concurrent haptic never worse than the joint baseline, per point
    mm_h = results[SchemeId.MMCT_HAPTIC].bler_haptic
    jt_h = results[SchemeId.NR_JOINT].bler_haptic
    margin = 2.0 * np.sqrt(sigma(mm_h) ** 2 + sigma(jt_h) ** 2)
    violations = int(np.count_nonzero(mm_h > jt_h + margin))
    _check(failures, violations == 0, f"(a) {violations} points violate the 2-sigma ordering")

    # (b) haptic power gain at BLER 1e-2 strictly positive
    report = gain_report(results, bler_target_h=1e-2, bler_target_v=1e-1)
    _check(
        failures,
        report.gain_haptic_db is not None and report.gain_haptic_db > 0.0,
        f"(b) haptic gain not positive: {report.gain_haptic_db}",
    )

    # (c) concurrent video within 1 dB of the video-alone baseline at BLER 1e-1
    mv = results[SchemeId.MMCT_VIDEO]
    va = results[SchemeId.NR_VIDEO_ALONE]
    c_mv = crossing_snr(mv.snr_db, mv.bler_video, 1e-1)
    c_va = crossing_snr(va.snr_db, va.bler_video, 1e-1)
    gap = None if None in (c_mv, c_va) else abs(c_mv - c_va)
    _check(failures, gap is not None and gap <= 1.0, f"(c) video gap {gap} dB > 1 dB")

    # (d) all-video degenerate concurrent run equals a direct two-layer run
    mapper0 = MapperConfig(layers=2, haptic_layers=1, rbs_per_layer=20, shared_haptic_rbs=0)
    common = dict(
        mapper=mapper0, mcs_haptic=MCS_TABLE[25], mcs_video=MCS_TABLE[25],
        snr_grid_db=(36.0, 44.0, 52.0), trials_per_point=60, rng_seed=2026,
    )
    deg = run_scenario(LinkScenario(scheme=SchemeId.MMCT_VIDEO, **common))
    direct = run_scenario(
        LinkScenario(scheme=SchemeId.NR_VIDEO_ALONE, haptic_share=0.0, **common)
    )
    sig_d = 2.0 * np.sqrt(2.0 * 0.25 / 60)
    within = np.all(np.abs(deg.bler_video - direct.bler_video) <= sig_d)
    _check(failures, bool(within), "(d) degenerate run differs beyond 2 sigma")

    runtime += time.monotonic() - started
    _check(failures, runtime < 900.0, f"runtime {runtime:.0f}s >= 15 min")
    _verdict(
        "criterion-7 link-level-properties",
        failures,
        f"gain_h {report.gain_haptic_db and round(report.gain_haptic_db, 1)} dB, "
        f"video gap {gap and round(gap, 2)} dB, runtime {runtime:.0f}s",
    )


def test_criterion_8_byte_identical_outputs(tmp_path):
    """Identical config+seed runs produce byte-identical CSVs."""
    failures: list[str] = []
    fast_link = [
        "--trials", "3", "--seed", "5",
        "--snr-start-db", "24", "--snr-stop-db", "40", "--snr-step-db", "8",
        "--subcarriers", "3", "--ofdm-symbols", "3",
        "--mcs-index", "13", "--low-mcs-index", "9",
    ]
    commands = {
        "outage-analytic": ["--M", "20000", "--snr-step-db", "2", "--seed", "5"],
        "linksim": fast_link,
        "eig-check": ["--trials", "10000", "--seed", "5", "--thetas", "pi/3"],
    }
    for command, flags in commands.items():
        dirs = [tmp_path / f"{command}-{i}" for i in (0, 1)]
        for out in dirs:
            rc = cli_main([command, "--out", str(out), *flags])
            _check(failures, rc == 0, f"{command} exited {rc}")
        csvs = sorted(p.name for p in dirs[0].glob("*.csv"))
        _check(failures, len(csvs) > 0, f"{command} wrote no CSVs")
        for name in csvs:
            same = (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()
            _check(failures, same, f"{command}/{name} differs between runs")
    _verdict("criterion-8 deterministic-outputs", failures)
