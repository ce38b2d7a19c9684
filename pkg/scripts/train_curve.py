"""Train one benchmark model and print the per-epoch loss and final eval metrics."""

import argparse

from tdgraph.train import benchmark_config, benchmark_data, evaluate_model, train_model


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--mode", default="dynamic")
    ap.add_argument("--no-lstm", action="store_true")
    ap.add_argument("--epochs", type=int, default=30)
    args = ap.parse_args()
    cfg = benchmark_config(seed=args.seed, mode=args.mode, use_lstm=not args.no_lstm, epochs=args.epochs)
    train, ev = benchmark_data(args.seed)
    res = train_model(cfg, train, 4)
    for e, loss in enumerate(res.epoch_losses, 1):
        print(f"epoch {e:3d}  loss {loss:.5f}")
    if res.epoch_losses:
        print(f"loss ratio last/first {res.epoch_losses[-1] / res.epoch_losses[0]:.3f}")
    result = evaluate_model(res.model, ev, cfg, 4)
    print(f"cls mAP {result.cls_map:.4f}  det mAP {result.det_map:.4f}")


if __name__ == "__main__":
    main()
