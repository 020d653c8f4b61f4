#!/usr/bin/env python3
"""
Interactive acceptance runner for the hypercontractivity checkers.
Runs the closed-form anchors end to end and prints a summary.
"""

import datetime
import json
import logging
import math
import sys
import time
from typing import Any, Dict

import numpy as np

import config
from utils.conditions import (
    beckner_point,
    check_local,
    convexity_report,
    lens_cP,
    lens_contains,
    local_margin,
    make_t_grid,
    nelson_exponent,
    r_star,
    scan_region,
    weissler_margin,
)
from utils.discrete import discrete_map_table, mfunctional_midpoint, two_point_margin
from utils.flow import FlowConfig, flow_monotonicity, global_check, necessity_probe, random_hermite_poly
from utils.hermite import ComplexParam, CPoly
from utils.custom_types import PolyBasis
from utils.scalarfn import FnPair, make_exp, make_linear, make_log1p, make_generator, make_plog, make_power

# Configure logging
logging.basicConfig(
    level=logging.WARNING,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    handlers=[logging.StreamHandler(sys.stdout)],
)
logger = logging.getLogger(__name__)


def power_pair(p: float, q: float) -> FnPair:
    return FnPair.from_PQ(make_power(p), make_power(q))


class VerificationTester:
    """Runs the numerical anchors and collects their outcomes"""

    def __init__(self, seed: int = config.DEFAULT_SEED):
        self.seed = seed
        self.test_results: Dict[str, Dict[str, Any]] = {}

    def _section(self, title: str):
        print("\n" + "=" * 60)
        print(title)
        print("=" * 60)

    def _record(self, name: str, passed: bool, **details) -> Dict[str, Any]:
        result = {"status": "success" if passed else "failed", **details}
        self.test_results[name] = result
        print(("✅ " if passed else "❌ ") + f"{name}: {details}")
        return result

    def _guard(self, name: str, fn) -> Dict[str, Any]:
        try:
            start = time.time()
            result = fn()
            result["seconds"] = round(time.time() - start, 2)
            return result
        except Exception as e:
            print(f"❌ {name} raised: {e}")
            self.test_results[name] = {"status": "error", "error": str(e)}
            return self.test_results[name]

    def test_equality_points(self) -> Dict[str, Any]:
        """Nelson and Beckner points give zero local margin"""
        self._section("📐 EQUALITY POINTS")

        def run():
            worst = 0.0
            for p, r in [(2.0, 0.5), (2.0, 1 / math.sqrt(3)), (3.0, 0.7)]:
                report = check_local(power_pair(p, nelson_exponent(p, r)), ComplexParam(r, 0.0))
                worst = max(worst, abs(report["min_margin"]))
            for p in (4 / 3, 1.5, 2.0):
                q, z = beckner_point(p)
                worst = max(worst, abs(check_local(power_pair(p, q), z)["min_margin"]))
            return self._record("equality_points", worst <= 1e-9, max_abs_margin=worst)

        return self._guard("equality_points", run)

    def test_region_oracles(self) -> Dict[str, Any]:
        """Scanner against the Weissler closed form and the lens formula"""
        self._section("🗺️  REGION ORACLES")

        def run():
            ts, _ = make_t_grid(1e-3, 1e3, 200)
            pair = power_pair(2.0, 4.0)
            region = scan_region(pair, 40, 40, ts)
            mismatches = 0
            for cell in region["cells"]:
                oracle = weissler_margin(2.0, 4.0, ComplexParam(cell["re"], cell["im"]))
                if abs(oracle) > 1e-6 and (oracle >= 0) != cell["admissible"]:
                    mismatches += 1
            c_P = lens_cP(make_plog(1.0))
            return self._record(
                "region_oracles",
                mismatches == 0 and abs(c_P - 2.5) <= 1e-6,
                weissler_mismatches=mismatches,
                plog_c_P=c_P,
                lens_contains_one=lens_contains(c_P, ComplexParam(1.0, 0.0))[0],
            )

        return self._guard("region_oracles", run)

    def test_r_star(self) -> Dict[str, Any]:
        """r* for the power pair and for a generated pair"""
        self._section("📏 R-STAR ANCHORS")

        def run():
            power_value = r_star(power_pair(2.0, 4.0))
            generated = make_generator(make_linear(2.0) + make_log1p(), make_linear(1.0))
            generated_value = r_star(generated, make_t_grid(1e-3, 1e6, 300)[0])
            return self._record(
                "r_star",
                abs(power_value - 1 / math.sqrt(3)) <= 1e-8 and abs(generated_value - 1 / math.sqrt(2)) <= 1e-6,
                power=power_value,
                generated=generated_value,
            )

        return self._guard("r_star", run)

    def test_global_audit(self, trials: int = 20) -> Dict[str, Any]:
        """Random polynomials at admissible points"""
        self._section("🌐 GLOBAL INEQUALITY AUDIT")

        def run():
            rng = np.random.default_rng(self.seed)
            q, beckner_z = beckner_point(1.5)
            configs = [
                (power_pair(2.0, 4.0), ComplexParam(1 / math.sqrt(3), 0.0)),
                (power_pair(1.5, q), beckner_z),
                (power_pair(3.0, 3.0), ComplexParam(0.0, 0.5)),
            ]
            worst = math.inf
            for pair, z in configs:
                for _ in range(trials):
                    f = random_hermite_poly(1, int(rng.integers(0, 7)), rng)
                    worst = min(worst, global_check(f, pair, z))
            return self._record("global_audit", worst >= -config.GLOBAL_TOL, min_margin=worst)

        return self._guard("global_audit", run)

    def test_flow_suite(self) -> Dict[str, Any]:
        """Monotone flow at the Nelson point and failure at an inadmissible point"""
        self._section("🌊 FLOW SUITE")

        def run():
            f = CPoly(1, {(0,): 1.0, (1,): 0.5}, PolyBasis.HERMITE)
            good = flow_monotonicity(FlowConfig(f, power_pair(2.0, 4.0), ComplexParam(1 / math.sqrt(3), 0.0)))
            bad_f = CPoly(1, {(0,): 1.0, (1,): 0.05}, PolyBasis.HERMITE)
            bad_pair = power_pair(2.0, 4.0)
            bad_z = ComplexParam(0.8, 0.0)
            bad = flow_monotonicity(FlowConfig(bad_f, bad_pair, bad_z))
            bad_margin = global_check(bad_f, bad_pair, bad_z)
            return self._record(
                "flow_suite",
                good["passed"] and good["endpoints"]["within_tolerance"] and not bad["passed"] and bad_margin < 0,
                admissible_min_increment=good["min_increment"],
                inadmissible_min_increment=bad["min_increment"],
                inadmissible_global_margin=bad_margin,
            )

        return self._guard("flow_suite", run)

    def test_necessity(self) -> Dict[str, Any]:
        """Probe sign at the inadmissible point (t^2, t^4, z = 0.8)"""
        self._section("🔍 NECESSITY PROBE")

        def run():
            pair = power_pair(2.0, 4.0)
            z = ComplexParam(0.8, 0.0)
            probe = necessity_probe(pair, z, 1.0, 1.0)
            margin = local_margin(pair, z, 1.0)
            return self._record("necessity", probe < 0 and margin < 0, probe=probe, local_margin=margin)

        return self._guard("necessity", run)

    def test_discrete_suite(self) -> Dict[str, Any]:
        """Discrete map, two-point inequality and quasi-mean convexity"""
        self._section("🎲 DISCRETE SUITE")

        def run():
            rng = np.random.default_rng(self.seed)
            pair = power_pair(2.0, 4.0)
            z = ComplexParam(1 / math.sqrt(3), 0.0)
            monotone = 0
            for _ in range(10):
                coeffs = rng.standard_normal(8) + 1j * rng.standard_normal(8)
                monotone += discrete_map_table(coeffs, pair, z)["monotone"]
            two_point = min(
                two_point_margin(pair.F, pair.P, z, complex(*rng.standard_normal(2)), complex(*rng.standard_normal(2)))
                for _ in range(200)
            )
            midpoint = min(
                mfunctional_midpoint(make_exp(), rng.random(5), rng.random(5), np.full(5, 0.2))
                for _ in range(100)
            )
            return self._record(
                "discrete_suite",
                monotone == 10 and two_point >= -1e-10 and midpoint >= -1e-10,
                monotone_tables=monotone,
                min_two_point=two_point,
                min_midpoint=midpoint,
            )

        return self._guard("discrete_suite", run)

    def test_hessian_equivalence(self) -> Dict[str, Any]:
        """Hessian determinant and -(F'/F'')'' agree in sign"""
        self._section("🧮 HESSIAN EQUIVALENCE")

        def run():
            agreements = {}
            for name, F in [("t^1.5", make_power(1.5)), ("t^2", make_power(2.0)), ("t^3", make_power(3.0))]:
                agreements[name] = convexity_report(F)["sign_agreement"]
            return self._record("hessian_equivalence", all(agreements.values()), agreements=agreements)

        return self._guard("hessian_equivalence", run)

    def generate_test_report(self) -> str:
        """Summarize and save the collected results"""
        self._section("📋 GENERATING TEST REPORT")

        passed = sum(1 for r in self.test_results.values() if r.get("status") == "success")
        failed = sum(1 for r in self.test_results.values() if r.get("status") in ("failed", "error"))
        report = {
            "test_session": {
                "timestamp": datetime.datetime.utcnow().isoformat() + "Z",
                "seed": self.seed,
            },
            "results": self.test_results,
            "summary": {
                "total_tests": len(self.test_results),
                "passed": passed,
                "failed": failed,
                "success_rate": (
                    f"{(passed / len(self.test_results) * 100):.1f}%" if self.test_results else "0%"
                ),
            },
        }

        print("📊 Test Summary:")
        print(f"   Total tests: {report['summary']['total_tests']}")
        print(f"   ✅ Passed: {passed}")
        print(f"   ❌ Failed: {failed}")
        print(f"   📈 Success rate: {report['summary']['success_rate']}")

        report_filename = f"verification_report_{datetime.datetime.now().strftime('%Y%m%d_%H%M%S')}.json"
        try:
            with open(report_filename, "w") as f:
                json.dump(report, f, indent=2, default=str)
            print(f"\n💾 Report saved to: {report_filename}")
        except Exception as e:
            print(f"❌ Failed to save report: {e}")
        return report_filename

    def run_all_tests(self) -> str:
        """Run every anchor"""
        print("🚀 STARTING HYPERCONTRACTIVITY VERIFICATION")
        print("=" * 80)
        self.test_equality_points()
        self.test_region_oracles()
        self.test_r_star()
        self.test_global_audit()
        self.test_flow_suite()
        self.test_necessity()
        self.test_discrete_suite()
        self.test_hessian_equivalence()
        return self.generate_test_report()


def main():
    """Main function to run the tester"""
    tester = VerificationTester()
    tests = {
        "equality": tester.test_equality_points,
        "region": tester.test_region_oracles,
        "rstar": tester.test_r_star,
        "global": tester.test_global_audit,
        "flow": tester.test_flow_suite,
        "necessity": tester.test_necessity,
        "discrete": tester.test_discrete_suite,
        "hessian": tester.test_hessian_equivalence,
    }

    print("🧪 Hypercontractivity Verification Tester")
    print("Choose an option:")
    print("1. Run all tests")
    print("2. Single test")

    try:
        choice = input("\nEnter your choice (1-2): ").strip()
        if choice == "1":
            tester.run_all_tests()
        elif choice == "2":
            print("Available tests: " + ", ".join(tests))
            name = input("Enter test name: ").strip().lower()
            if name in tests:
                tests[name]()
            else:
                print("Invalid test name")
        else:
            print("Invalid choice")
    except KeyboardInterrupt:
        print("\n\n👋 Testing interrupted by user")
    except Exception as e:
        print(f"\n❌ Error during testing: {e}")


if __name__ == "__main__":
    main()
