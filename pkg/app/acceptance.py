"""
MHK Acceptance Module
The verify-all battery: fourteen property checks at desk scale, each reported
as a CheckResult
"""
import logging
import math
from typing import Callable, List, Tuple

import numpy as np

from config.settings import settings
from app import algebra, blaschke, cara, interp, sampling, schur, symm
from app.errors import DeterminantVanishes, InvalidArgument, MhkError
from app.models import CheckResult, VerifyReport
from app.mps import (
    MatrixPowerSeries,
    backward_shift,
    contour_eval,
    eval_scalar,
    evaluate,
    integrate,
    left_mul,
    multiplication_matrix,
    resolvent,
    shift,
    star_mul,
)
from app.numkit import adjoint, fro, stein_series, stein_solve, stein_solve_pair
from app.spaces import WeightSequence, fock_weights_from_gaussian, hardy_inner, weighted_inner

logger = logging.getLogger(__name__)


class AcceptanceRunner:
    """
    Runs the acceptance battery with one seeded generator per check

    Every check is independent: an error inside one is reported as a failed
    CheckResult and the battery carries on. Instance counts are the full
    acceptance counts at scale 1; a smaller scale shrinks them for quick runs.
    """

    def __init__(self, seed: int = settings.SEED, scale: float = 1.0):
        if scale <= 0:
            raise InvalidArgument(f"scale must be positive, got {scale}")
        self.seed = seed
        self.scale = scale

    def count(self, full: int) -> int:
        return max(1, int(round(full * self.scale)))

    def run(self) -> VerifyReport:
        """
        Run every check in order

        Returns:
            VerifyReport with success iff every check passed
        """
        checks: List[Tuple[str, Callable[[np.random.Generator], Tuple[float, float, str]]]] = [
            ("stein_exactness", self.stein_exactness),
            ("star_ring_laws", self.star_ring_laws),
            ("contour_equals_series", self.contour_equals_series),
            ("blaschke_battery", self.blaschke_battery),
            ("resolvent_calculus", self.resolvent_calculus),
            ("interpolation", self.interpolation),
            ("schur_battery", self.schur_battery),
            ("leech_round_trip", self.leech_round_trip),
            ("coisometric_extraction", self.coisometric_extraction),
            ("counterexample", self.counterexample),
            ("caratheodory", self.caratheodory),
            ("fock_adjunction", self.fock_adjunction),
            ("symmetry_closure", self.symmetry_closure),
            ("wiener_rational", self.wiener_rational),
        ]
        results = []
        for index, (name, check) in enumerate(checks):
            rng = sampling.rng_for(self.seed * 1000 + index)
            try:
                value, threshold, detail = check(rng)
                passed = value <= threshold
            except MhkError as exc:
                value, threshold, detail, passed = math.inf, 0.0, f"{exc.code}: {exc.message}", False
            logger.info("verify-all %-24s %s value=%.3e threshold=%.1e", name,
                        "pass" if passed else "FAIL", value, threshold)
            results.append(CheckResult(name=name, passed=passed, value=_finite(value),
                                       threshold=threshold, detail=detail))
        return VerifyReport(success=all(r.passed for r in results), seed=self.seed, checks=results)

    # ---- 1 ----

    def stein_exactness(self, rng):
        residual, oracle = 0.0, 0.0
        for _ in range(self.count(100)):
            p = int(rng.integers(1, 5))
            a = sampling.with_radius(rng, p, 0.9 * rng.uniform(0.1, 1.0))
            b = sampling.with_radius(rng, p, 0.9 * rng.uniform(0.1, 1.0))
            rhs = sampling.random_cmat(rng, p)
            g = stein_solve(a)
            x = stein_solve_pair(a, b, rhs)
            residual = max(residual, fro(g - a @ g @ adjoint(a) - np.eye(p)), fro(x - a @ x @ adjoint(b) - rhs))
            oracle = max(oracle, fro(x - stein_series(a, b, rhs)))
        return max(residual / 1e-10, oracle / 1e-9), 1.0, f"residual {residual:.1e}, series oracle {oracle:.1e}"

    # ---- 2 ----

    def star_ring_laws(self, rng):
        worst = 0.0
        for _ in range(self.count(50)):
            f, g, h = (sampling.random_polynomial(rng, 2, 5) for _ in range(3))
            left = star_mul(star_mul(f, g), h)
            right = star_mul(f, star_mul(g, h))
            worst = max(worst, left.max_deviation(right) / max(1.0, left.hardy_norm()))
            ident = MatrixPowerSeries.identity(2)
            worst = max(worst, star_mul(f, ident).max_deviation(f))
            z = 0.9 * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
            prod = star_mul(f, g)
            worst = max(worst, fro(eval_scalar(prod, z) - eval_scalar(f, z) @ eval_scalar(g, z))
                        / max(1.0, fro(eval_scalar(prod, z))))
        return worst, 1e-11, "associativity, identity, scalar-slice homomorphism"

    # ---- 3 ----

    def contour_equals_series(self, rng):
        worst = 0.0
        for _ in range(self.count(50)):
            f = sampling.random_polynomial(rng, 2, 5)
            a = sampling.with_radius(rng, 2, 0.5)
            direct = evaluate(f, a)
            worst = max(worst, fro(contour_eval(f, a, 0.8, 128) - direct) / max(1.0, fro(direct)))
        return worst, 1e-9, "trapezoid contour on |z| = 0.8 against Horner"

    # ---- 4 ----

    def blaschke_battery(self, rng):
        order = 60
        a = sampling.with_radius(rng, 2, 0.5)
        bf = blaschke.build(a, order)
        root = fro(evaluate(bf.series, a))
        orth = 0.0
        rho = 0.5
        for n in range(6):
            for k in range(6):
                gram = hardy_inner(shift(bf.series, n), shift(bf.series, k))
                target = np.eye(2) if n == k else np.zeros((2, 2))
                bound = 2 * rho ** (2 * (order - max(n, k))) / (1 - rho ** 2)
                orth = max(orth, max(0.0, fro(gram - target) - bound))
        f = sampling.random_polynomial(rng, 2, 15)
        uf = star_mul(bf.series, f)
        iso = fro(hardy_inner(uf, uf) - hardy_inner(f, f)) / max(1.0, fro(hardy_inner(f, f)))
        real = blaschke.check_weighted_unitary(blaschke.realization(bf))
        quat = blaschke.build(symm.embed_quaternion(0.3, 0.4), order)
        quat_gap = max(fro(quat.gamma - 4.0 / 3.0 * np.eye(2)), fro(quat.l - np.eye(2)))
        value = max(root / 1e-10, orth / 1e-10, iso / 1e-6, real / 1e-10, quat_gap / 1e-12)
        return value, 1.0, (f"root {root:.1e}, orthonormality {orth:.1e}, isometry {iso:.1e}, "
                            f"realization {real:.1e}, quaternion {quat_gap:.1e}")

    # ---- 5 ----

    def resolvent_calculus(self, rng):
        worst = 0.0
        for _ in range(self.count(30)):
            f = sampling.random_polynomial(rng, 2, 8)
            a = sampling.with_radius(rng, 2, 0.7)
            b = sampling.with_radius(rng, 2, 0.7)
            worst = max(worst, resolvent(f, np.zeros((2, 2))).max_deviation(backward_shift(f)))
            # G = (I - M_A R_0)^{-1} F by back substitution, then R_A F = R_0 G
            g = np.zeros_like(f.coeffs)
            g[-1] = f.coeffs[-1]
            for n in range(f.order - 1, -1, -1):
                g[n] = f.coeffs[n] + a @ g[n + 1]
            via_r0 = backward_shift(MatrixPowerSeries(g, p=2))
            ra = resolvent(f, a)
            worst = max(worst, ra.max_deviation(via_r0))
            rb = resolvent(f, b)
            lhs = ra - rb.pad(ra.order)
            rhs = resolvent(left_mul(a, rb) - left_mul(b, rb), a)
            worst = max(worst, lhs.max_deviation(rhs.pad(lhs.order)))
        return worst, 1e-10, "R_0 case, R_A = R_0 (I - M_A R_0)^{-1}, resolvent equation"

    # ---- 6 ----

    def interpolation(self, rng):
        order = 60
        worst_nodes, worst_theta, worst_psi, worst_orth = 0.0, 0.0, 0.0, 0.0
        for _ in range(self.count(20)):
            count = int(rng.integers(1, 4))
            nodes = sampling.interpolation_nodes(rng, 2, count, 0.6)
            values = [sampling.random_cmat(rng, 2) for _ in nodes]
            sol = interp.solve_min(interp.InterpolationData.of(nodes, values), order)
            for _ in range(5):
                g = sampling.random_polynomial(rng, 2, 6)
                res = interp.residuals(sol, g)
                worst_nodes = max(worst_nodes, res["fmin"], res["parametrized"])
                worst_theta = max(worst_theta, res["theta"])
                worst_orth = max(worst_orth, res["orthogonality"])
            worst_psi = max(worst_psi, blaschke.check_weighted_unitary(interp.psi_realization(nodes)))
        value = max(worst_nodes / 1e-7, worst_theta / 1e-8, worst_psi / 1e-9, worst_orth / 1e-7)
        return value, 1.0, (f"nodes {worst_nodes:.1e}, theta {worst_theta:.1e}, "
                            f"psi {worst_psi:.1e}, orthogonality {worst_orth:.1e} (ratio to targets)")

    # ---- 7 ----

    def schur_battery(self, rng):
        worst, tilde_gap = 0.0, 0.0
        for _ in range(self.count(30)):
            u = sampling.contractive_colligation(rng, 3, 2)
            s = schur.realization_to_series(u, 200)
            norms = [schur.toeplitz_contraction(s, n)[0] for n in (8, 16, 32)]
            if any(b < a - 1e-12 for a, b in zip(norms, norms[1:])) or norms[-1] > 1 + settings.CONTRACTION_SLACK:
                return math.inf, 0.0, f"toeplitz norms {norms}"
            points = [sampling.with_radius(rng, 2, 0.5) for _ in range(4)]
            if not schur.kernel_gram(s, points).psd:
                return math.inf, 0.0, "kernel Gram not PSD for a realized multiplier"
            worst = max(worst, schur.kernel_decomposition_residual(u, s, points[0], points[1], 200))
            tilde_norm = schur.toeplitz_contraction(schur.tilde(s), 16)[0]
            tilde_gap = max(tilde_gap, abs(tilde_norm - norms[1]))
            t = multiplication_matrix(s, 16)
            z = schur.shift_matrix(2, 16)
            worst = max(worst, fro(t @ z - z @ t))
            f, g = sampling.random_polynomial(rng, 2, 5), sampling.random_polynomial(rng, 2, 5)
            worst = max(worst, fro(hardy_inner(shift(f), shift(g)) - hardy_inner(f, g)))
        return max(worst / 1e-8, tilde_gap / 1e-12), 1.0, (f"decomposition, commutation and Hardy shift {worst:.1e}, "
                                                      f"tilde gap {tilde_gap:.1e}")

    # ---- 8 ----

    def leech_round_trip(self, rng):
        order = 40
        nodes = sampling.interpolation_nodes(rng, 2, 2, 0.5)
        theta = interp.theta(nodes, order)
        s0 = sampling.schur_series(rng, 2, order, state=2, scale=0.5)
        q = star_mul(theta, s0, max_order=order)
        sample = sampling.leech_sample(rng, 2)
        res = schur.leech_solve(theta, q, sample, order)
        if not schur.toeplitz_contraction(res.series, order)[1]:
            return math.inf, 0.0, "recovered factor is not contractive"
        # an inner Q has a finite-dimensional model, so P = I must give Q back coefficientwise
        inner = sampling.schur_series(rng, 2, 3 * order, state=2, scale=1.0)
        ident = MatrixPowerSeries.identity(2, order)
        trivial = schur.leech_solve(ident, inner, sampling.model_sample(rng, 2), order)
        recovered = trivial.series.max_deviation(inner, through=order)
        value = max(res.residual / 1e-5, recovered / 1e-10)
        return value, 1.0, (f"Theta case residual {res.residual:.1e}, identity case coefficients {recovered:.1e} "
                            f"at model rank {trivial.rank}")

    # ---- 9 ----

    def coisometric_extraction(self, rng):
        a = 0.5
        coeffs = [-a] + [(1 - a * a) * a ** (n - 1) for n in range(1, 41)]
        model = schur.coisometric_extract(MatrixPowerSeries(np.array(coeffs).reshape(-1, 1, 1), p=1), 40)
        z_model = schur.coisometric_extract(MatrixPowerSeries(np.array([0.0, 1.0]).reshape(-1, 1, 1), p=1), 40)
        shape_gap = 0.0 if z_model.model_dim == 1 else 1.0
        if z_model.model_dim == 1:
            shape_gap = max(abs(z_model.t_op[0, 0]), abs(abs(z_model.f_op[0, 0]) - 1),
                            abs(abs(z_model.g_op[0, 0]) - 1), abs(z_model.g_op[0, 0] * z_model.f_op[0, 0] - 1),
                            abs(z_model.h_op[0, 0]))
        value = max(model.reconstruction_residual, shape_gap)
        return value, 1e-7, f"Blaschke reconstruction {model.reconstruction_residual:.1e}, S = z model gap {shape_gap:.1e}"

    # ---- 10 ----

    def counterexample(self, rng):
        report = schur.counterexample_suite(20, int(rng.integers(0, 2 ** 31)))
        value = report["isometry_relative"] / 1e-12
        if report["lambda_min_at_hadamard"] >= -0.1:
            value = math.inf
        return value, 1.0, f"lambda_min at Hadamard {report['lambda_min_at_hadamard']:.4f}"

    # ---- 11 ----

    def caratheodory(self, rng):
        worst = 0.0
        conventions = set()
        for _ in range(4):
            data = sampling.herglotz_data(rng, 2, 3)
            phi = cara.herglotz_series(data, 40)
            for depth in (1, 4, 8):
                if not cara.moment_check(phi, depth)[0]:
                    return math.inf, 0.0, f"moment check failed at depth {depth}"
            points = [0.3 * np.eye(2), sampling.random_normal(rng, 2, 0.5)]
            if not cara.cara_kernel_gram(phi, points).psd:
                return math.inf, 0.0, "Caratheodory kernel Gram not PSD"
            rec = cara.realization_recovery(phi, 40)
            conventions.add((rec.convention, rec.phi0_normalization))
            worst = max(worst, rec.residuals["power_n"], rec.residuals["phi0_twice_re"], rec.invariance_residual)
        if conventions != {("power_n", "twice_re")}:
            return math.inf, 0.0, f"inconsistent conventions {sorted(conventions)}"
        return worst, 1e-7, "Phi_n = C_0 R_0^n C_0^*, C_0 C_0^* = 2 Re Phi_0"

    # ---- 12 ----

    def fock_adjunction(self, rng):
        worst = 0.0
        fock = WeightSequence.fock(12)
        for _ in range(10):
            f, g = sampling.random_polynomial(rng, 2, 6), sampling.random_polynomial(rng, 2, 6)
            lhs = weighted_inner(backward_shift(f).pad(12), g.pad(12), fock)
            rhs = weighted_inner(f.pad(12), shift(integrate(g)).pad(12), fock)
            worst = max(worst, fro(lhs - rhs) / max(1.0, fro(lhs)))
        weights = fock_weights_from_gaussian(4).array()
        quad = max(abs(w - math.factorial(n)) for n, w in enumerate(weights))
        return max(worst / 1e-12, quad / 1e-6), 1.0, f"adjunction {worst:.1e}, Gaussian weights {quad:.1e}"

    # ---- 13 ----

    def symmetry_closure(self, rng):
        worst = 0.0
        quat, spl = symm.quaternionic(1), symm.split(1)
        for _ in range(10):
            worst = max(worst, symm.blaschke_symmetry_check(quat, sampling.quaternion_node(rng), 30))
            worst = max(worst, symm.blaschke_symmetry_check(spl, sampling.split_node(rng), 30))
        pairs = [(sampling.random_cmat(rng, 2), sampling.random_cmat(rng, 2)) for _ in range(20)]
        if not symm.admissible_check(quat, pairs).passed or not symm.admissible_check(spl, pairs).passed:
            return math.inf, 0.0, "standard symmetry failed the axioms"
        bad = symm.admissible_check(symm.custom(np.diag([1.0, 2.0]), similarity=True), pairs)
        if bad.passed:
            return math.inf, 0.0, "non-unitary similarity passed the axioms"
        return worst, 1e-9, f"non-unitary J violates {bad.violated}"

    # ---- 14 ----

    def wiener_rational(self, rng):
        worst = 0.0
        for _ in range(5):
            tail = sampling.random_series(rng, 2, 10, decay=0.4)
            coeffs = np.array(tail.coeffs)
            coeffs[0] = 0
            scale = sum(np.linalg.norm(c, 2) for c in coeffs)
            coeffs = coeffs * (0.45 / scale)
            coeffs[0] += np.eye(2)
            f = MatrixPowerSeries(coeffs, p=2)
            g = algebra.wplus_invert(algebra.WienerSeries(f), 40)
            worst = max(worst, algebra.inversion_residual(f, g, 40))
        bad = MatrixPowerSeries(np.stack([np.eye(2), -2 * np.eye(2)]), p=2)
        try:
            algebra.wplus_invert(algebra.WienerSeries(bad), 20)
            return math.inf, 0.0, "I - 2Z was not rejected"
        except DeterminantVanishes as exc:
            z = exc.witness.get("z")
            if z is None or abs(z - 0.5) > 1e-6:
                return math.inf, 0.0, f"wrong zero witness {z}"
        hankel = 0.0
        for _ in range(self.count(20)):
            u = sampling.contractive_colligation(rng, 3, 2, scale=0.8)
            s = schur.realization_to_series(u, 40)
            back = algebra.hankel_realize(s).to_series(40, p=2)
            hankel = max(hankel, back.max_deviation(s))
        return max(worst / 1e-10, hankel / 1e-8), 1.0, f"inversion {worst:.1e}, Hankel {hankel:.1e}"


def _finite(x: float) -> float:
    return x if math.isfinite(x) else 1e308


def get_runner(seed: int = settings.SEED, scale: float = 1.0) -> AcceptanceRunner:
    return AcceptanceRunner(seed, scale)
