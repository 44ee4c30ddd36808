"""Repeated ERM on the credit-like stand-in for the oscillating and the settling
parameter sets, next to the exact single-atom dynamics."""
from perfpac.core import DriftParams
from perfpac.experiment import RermConfig, run_rerm
from perfpac.rerm import rerm_exact

for params in ([0.8, 0.0, 0.48, 0.52], [0.1, 0.8, 0.2, 0.3]):
    dyn = rerm_exact([0.5], DriftParams(*params))
    res = run_rerm(RermConfig(params=params))
    print(f"params={params} exact: fixed={dyn.fixed_points} cycles={dyn.cycles}")
    print(f"  status={res['status']} at={res['at']} period={res['period']} "
          f"perm_test_accuracy={res['perm_test_accuracy']:.4f}")
    for r in res["iterations"]:
        print(f"  t={r['iteration']:>2} test_acc={r['test_accuracy']:.4f} "
              f"pos_rate={r['positive_rate']:.3f} changed={r['n_changed']}")
