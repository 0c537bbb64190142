"""Tests de las campañas Monte-Carlo y de la rejilla ruido × velocidad."""
import numpy as np
import pytest

from gyro_calibration.application.simulation.monte_carlo import (
    ErrorStats,
    RedrawPolicy,
    campaign_scenarios,
    monte_carlo,
    noise_speed_grid,
    run_seeds,
)
from gyro_calibration.application.simulation.scenario import REFERENCE_AXIS, draw_scenario
from gyro_calibration.domain.entities import GyroModel
from gyro_calibration.domain.exceptions import CalibrationInputError

FIXED_SCALE = (1.05, 0.95, 1.1)
REFERENCE_SCALE = (1.033, 0.811, 1.151)


def _base(seed: int = 10, **overrides):
    fields = {"samples_per_segment": 100, "rotation_samples": 300}
    fields.update(overrides)
    return draw_scenario(seed, fields)


def test_semillas_por_corrida_deterministas_y_distintas() -> None:
    seeds = run_seeds(123, 50)

    assert seeds == run_seeds(123, 50)
    assert len(set(seeds)) == 50
    assert run_seeds(123, 10) == seeds[:10]


def test_una_corrida_sin_ruido_no_tiene_error() -> None:
    base = _base(noise_sigma_gyro=0.0, noise_sigma_accel=0.0)

    summary = monte_carlo(base, runs=1)

    assert summary.runs == 1
    assert summary.failures == 0
    for stats in summary.scale_error:
        assert abs(stats.max) <= 1e-9 and abs(stats.min) <= 1e-9


def test_politica_redraw_sortea_modelo_y_fixed_lo_conserva() -> None:
    base = _base(true_gyro=GyroModel(scale=FIXED_SCALE, bias=(0.0, 0.0, 0.0)))

    redrawn = campaign_scenarios(base, 5, RedrawPolicy.REDRAW)
    fixed = campaign_scenarios(base, 5, RedrawPolicy.FIXED)

    assert len({tuple(cfg.true_gyro.scale) for cfg in redrawn}) == 5
    for cfg in fixed:
        np.testing.assert_array_equal(cfg.true_gyro.scale, FIXED_SCALE)
    assert [cfg.seed for cfg in redrawn] == [cfg.seed for cfg in fixed]


def test_dispersion_del_producto_escalar_se_concentra_tras_calibrar() -> None:
    """50 corridas a 50 °/s con σ = 0.1 °/s: el IQR posterior es menor que el previo."""
    summary = monte_carlo(_base(), runs=50)

    assert summary.failures == 0
    assert summary.dot_spread_after.iqr < summary.dot_spread_before.iqr
    assert summary.dot_spread_after.count == 50 * 4


def test_escenario_de_referencia_en_500_corridas() -> None:
    """K = (1.033, 0.811, 1.151), eje (−1, 1, −1), 50 °/s, σ = 0.1 °/s."""
    base = draw_scenario(
        2024,
        {
            "true_gyro": GyroModel(scale=REFERENCE_SCALE, bias=(0.0, 0.0, 0.0)),
            "axis": REFERENCE_AXIS,
            "speed": 50.0,
            "noise_sigma_gyro": 0.1,
        },
    )

    summary = monte_carlo(base, runs=500, redraw_policy=RedrawPolicy.FIXED)

    assert summary.failures == 0
    errors = np.abs(summary.estimates() / np.asarray(REFERENCE_SCALE) - 1.0)
    assert np.all(np.median(errors, axis=0) < 0.01)
    assert summary.dot_spread_after.iqr < summary.dot_spread_before.iqr


def test_campana_determinista() -> None:
    first = monte_carlo(_base(seed=4), runs=5)
    second = monte_carlo(_base(seed=4), runs=5)

    np.testing.assert_array_equal(first.estimates(), second.estimates())
    assert first.to_dict() == second.to_dict()


def test_resultado_no_depende_del_numero_de_procesos() -> None:
    serial = monte_carlo(_base(seed=5), runs=4, workers=1)
    parallel = monte_carlo(_base(seed=5), runs=4, workers=2)

    np.testing.assert_array_equal(serial.estimates(), parallel.estimates())


def test_fallos_se_cuentan_por_tipo() -> None:
    """Con el eje vertical todas las corridas fallan por geometría."""
    summary = monte_carlo(_base(tilt_deg=0.0), runs=3)

    assert summary.failures == 3
    assert summary.failure_reasons == {"GeometryDegenerateError": 3}
    assert summary.scale_error[0].count == 0
    assert summary.to_dict()["scale_error"]["x"]["median"] is None
    assert all(row["status"] == "GeometryDegenerateError" for row in summary.run_rows())


def test_filas_por_corrida_y_de_diagrama_de_caja() -> None:
    summary = monte_carlo(_base(), runs=3)

    rows = summary.run_rows()
    assert [row["run"] for row in rows] == [0, 1, 2]
    assert {"seed", "status", "true_kx", "est_kz", "err_ky"} <= set(rows[0])
    series = [row["series"] for row in summary.boxplot_rows()]
    assert series == ["scale_error_x", "scale_error_y", "scale_error_z", "dot_spread_before", "dot_spread_after"]


def test_corridas_invalidas() -> None:
    with pytest.raises(CalibrationInputError):
        monte_carlo(_base(), runs=0)


def test_error_stats_percentiles() -> None:
    stats = ErrorStats.from_values([1.0, 2.0, 3.0, 4.0, 5.0, float("nan")])

    assert stats.count == 5
    assert stats.median == 3.0
    assert stats.q1 == 2.0 and stats.q3 == 4.0
    assert stats.iqr == 2.0
    assert stats.to_dict()["max"] == 5.0


# =============================================================================
# REJILLA RUIDO × VELOCIDAD
# =============================================================================


def test_ruido_pesa_menos_a_mayor_velocidad() -> None:
    """K fijo, σ = 30 °/s: la desviación de Kx a 200 °/s es menor que a 5 °/s."""
    base = _base(
        true_gyro=GyroModel(scale=FIXED_SCALE, bias=(0.5, -0.5, 1.0)),
        rotation_samples=2000,
    )

    grid = noise_speed_grid(base, sigmas=[30.0], speeds=[5.0, 200.0], runs=40)

    slow, fast = grid.cell(30.0, 5.0), grid.cell(30.0, 200.0)
    assert fast.failures == 0
    assert fast.std[0] < slow.std[0]
    assert fast.mean[0] == pytest.approx(FIXED_SCALE[0], rel=0.01)


def test_rejilla_sin_ruido_recupera_k_en_todas_las_celdas() -> None:
    base = _base(
        true_gyro=GyroModel(scale=FIXED_SCALE, bias=(0.0, 0.0, 0.0)),
        noise_sigma_gyro=0.0,
        noise_sigma_accel=0.0,
    )

    grid = noise_speed_grid(base, sigmas=[0.0], speeds=[5.0, 50.0, 200.0], runs=2)

    assert len(grid.cells) == 3
    for cell in grid.cells:
        np.testing.assert_allclose(cell.mean, FIXED_SCALE, rtol=1e-9)
    assert len(grid.estimate_rows()) == 6
    assert {"sigma_dps", "speed_dps", "var_kx"} <= set(grid.rows()[0])


def test_desviacion_decrece_con_la_velocidad_en_1000_corridas() -> None:
    """σ = 30 °/s sobre {5, 50, 100, 200} °/s: la serie de desviaciones de Kx no crece."""
    speeds = [5.0, 50.0, 100.0, 200.0]
    base = draw_scenario(8, {"true_gyro": GyroModel(scale=FIXED_SCALE, bias=(0.5, -0.5, 1.0))})

    grid = noise_speed_grid(base, sigmas=[30.0], speeds=speeds, runs=1000)

    stds = [grid.cell(30.0, speed).std[0] for speed in speeds]
    assert stds[-1] < stds[0]
    violations = [(a, b) for a, b in zip(stds, stds[1:]) if b > a]
    assert len(violations) <= 1
    assert all(b <= 1.05 * a for a, b in violations)
