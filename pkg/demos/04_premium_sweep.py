"""Premium sweep: moral hazard without experience rating, and with it.

Sweeps the base premium for the flat contract and the experience-rated
one on a coarsened grid, prints the regime bands, and reproduces the
headline comparison: without experience rating the insured treats cover
and mitigation as substitutes; with it there is a premium band where the
insurer retains the customer who also mitigates every year.
"""

from cyberprov.config import emit_experiment_defaults, validate_config
from cyberprov.sweep import run_sweep

doc = emit_experiment_defaults().to_dict()
doc["sweep"] = {"premium_min": 4.0, "premium_max": 5.5, "premium_step": 0.005}
config = validate_config(doc)

results = run_sweep(config)
for variant, label in (("flat", "flat premium (no experience rating)"),
                       ("bm", "experience-rated premium")):
    rows = results[variant].rows
    print(f"=== {label} ===")
    for change in results[variant].regime_changes:
        print(
            f"  regime change at {change['premium_from']:.3f} -> "
            f"{change['premium_to']:.3f}: "
            f"retention {change['before']['retention']} -> {change['after']['retention']}, "
            f"mitigation {change['before']['mitigation']} -> {change['after']['mitigation']}"
        )
    print("  premium   retention  mitigation_yrs  loss_prevented  insurer_profit")
    for r in rows[:: len(rows) // 12]:
        print(
            f"  {r.base_premium:7.3f}   {r.retention:9.4f}  {r.mitigation_years:14.3f}"
            f"  {r.loss_prevented:14.3f}  {r.insurer_profit:+14.4f}"
        )
    print()

flat_rows = results["flat"].rows
bm_rows = results["bm"].rows
best_flat = max((r for r in flat_rows if r.retention > 0), key=lambda r: r.insurer_profit)
best_keep = max(
    (r for r in bm_rows if r.retention >= 1 - 1e-9), key=lambda r: r.insurer_profit
)
best_any = max((r for r in bm_rows if r.retention > 0), key=lambda r: r.insurer_profit)
print("Headline comparison (profit is net of compensation, <= 0 by zero-sum):")
print(f"  flat:  best profit while retained  {best_flat.insurer_profit:+.3f} "
      f"at premium {best_flat.base_premium:.3f}, "
      f"loss prevented only {best_flat.loss_prevented:.3f}")
print(f"  rated: best profit, full retention {best_keep.insurer_profit:+.3f} "
      f"at premium {best_keep.base_premium:.3f}, "
      f"loss prevented {best_keep.loss_prevented:.3f}")
print(f"  rated: best profit before losing the insured {best_any.insurer_profit:+.3f} "
      f"at premium {best_any.base_premium:.3f}")
