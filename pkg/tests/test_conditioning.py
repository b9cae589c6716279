import numpy as np

from codedmrpt.coding.conditioning import conditioning_report, vandermonde_condition
from codedmrpt.coding.matdot import CodeConfig


def test_single_block_code_is_perfectly_conditioned() -> None:
    report = conditioning_report(CodeConfig.chebyshev(1, 1))
    assert report.condition == 1.0
    assert not report.warning
    assert report.exhaustive


def test_small_integer_points_are_reported_without_warning() -> None:
    report = conditioning_report(CodeConfig(m=2, n_workers=3, betas=(1.0, 2.0, 3.0)))
    vander = np.array([[1.0, 1.0, 1.0], [1.0, 2.0, 4.0], [1.0, 3.0, 9.0]])
    assert report.condition == np.linalg.cond(vander)
    assert 60.0 < report.condition < 80.0
    assert report.worst_betas == (1.0, 2.0, 3.0)
    assert not report.warning


def test_high_degree_integer_points_trigger_warning() -> None:
    report = conditioning_report(CodeConfig.integer(8, 15))
    assert report.warning
    assert report.subsets_checked == 1


def test_chebyshev_points_beat_integer_points() -> None:
    cheb = conditioning_report(CodeConfig.chebyshev(4, 10))
    ints = conditioning_report(CodeConfig.integer(4, 10))
    assert cheb.condition < ints.condition
    assert cheb.subsets_checked == 120


def test_sampling_kicks_in_above_the_subset_cap() -> None:
    report = conditioning_report(CodeConfig.chebyshev(3, 12), max_subsets=50, seed=3)
    assert not report.exhaustive
    # 50 random subsets plus the tightest consecutive window.
    assert report.subsets_checked == 51
    assert report.condition >= vandermonde_condition(report.worst_betas) - 1e-9
