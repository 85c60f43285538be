"""Regenerate the archived nominal trial: ``python tests/golden/make_golden.py``."""

import json
import pathlib

from onebit_doa.config import load_spec_file, scenario_spec

HERE = pathlib.Path(__file__).parent
SPEC = HERE.parents[1] / "configs" / "reference.yaml"


def golden_trial():
    from onebit_doa import run_trial

    raw, _ = load_spec_file(SPEC)
    return run_trial(scenario_spec(raw), 0, 0)


def to_json(r):
    return {
        "theta_hat": r.theta_hat.tolist(),
        "column_indices": r.column_indices.tolist(),
        "D_hat_re": r.D_hat.real.tolist(),
        "D_hat_im": r.D_hat.imag.tolist(),
        "model_order_detected": r.model_order_detected,
        "matched_rmse_theta": r.matched_rmse_theta,
        "nmse_D": r.nmse_D,
        "nmse_H": r.nmse_H,
        "iterations": r.iterations,
    }


if __name__ == "__main__":
    (HERE / "nominal_trial.json").write_text(json.dumps(to_json(golden_trial()), indent=2) + "\n")
