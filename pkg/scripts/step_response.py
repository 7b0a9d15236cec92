"""Print the controller's response to an error step up and back down.

The error signal is 0 for one second, 1 for four seconds, then 0 again.
Columns are the smoothed error and the shown opacity, once per 100 ms.
"""
import argparse

from ghostguide.controller import ControllerConfig, OpacityController, time_constant_s


def main():
    ap = argparse.ArgumentParser(description="controller step response")
    ap.add_argument("--lambda-up", type=float, default=ControllerConfig.lambda_up)
    ap.add_argument("--lambda-down", type=float, default=ControllerConfig.lambda_down)
    args = ap.parse_args()

    cfg = ControllerConfig(lambda_up=args.lambda_up, lambda_down=args.lambda_down, e_initial=0.0)
    hz = cfg.frame_hz
    times = [1000.0 * k / hz for k in range(int(9 * hz))]
    errors = [1.0 if 1000.0 <= t < 5000.0 else 0.0 for t in times]
    trace = OpacityController(cfg).run(times, errors)

    print(f"time constants: rise {time_constant_s(cfg.lambda_up, hz):.3f} s, "
          f"fall {time_constant_s(cfg.lambda_down, hz):.3f} s")
    print("t_ms,E,e_hat,alpha")
    for k, f in enumerate(trace):
        if k % 3 == 0:
            print(f"{f.t_ms:.0f},{f.E_t:g},{f.e_hat:.4f},{f.alpha_shown:.4f}")


if __name__ == "__main__":
    main()
