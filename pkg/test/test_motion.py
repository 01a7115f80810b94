import cmath
import math
import unittest
from dataclasses import replace
from fractions import Fraction

import numpy as np

from iterjulia.exceptions import (
    AmbiguousPreimage,
    BoundsViolation,
    CoLandingBroken,
    ExpansionLost,
    NoPreimageInDisc,
    PathNotContinuable,
)
from iterjulia.hyperbolicity import CertifyConfig, certify, julia_sample
from iterjulia.motion import (
    ParamPath,
    compare_motions,
    continue_along_path,
    hausdorff_distance,
    holomorphy_defect,
    injectivity_gap,
    move_points,
    ray_landing_motion,
    shadow_conjugate,
    shadow_orbit,
)
from iterjulia.polyseq import Bounds, PolySpec, SeededPerturbation, SequenceSpec
from iterjulia.utils import RABBIT_C

from .util import (
    DEEP,
    RABBIT,
    RABBIT_ANGLES,
    SQUARE,
    alpha_fixed_point,
    beta_fixed_point,
    perturbed_rabbit,
    quadratic,
)


#: z^2 with room in the bounds for small constant terms
LOOSE_SQUARE = quadratic(0, M=0.1)

LIGHT = CertifyConfig(m_max=2, n_max=6, grid=65)

#: The rabbit with room in the bounds for nearby parameters
LOOSE_RABBIT = quadratic(RABBIT_C, M=0.76)


def perturbed_square(radius: float, seed: int = 3) -> SequenceSpec:
    return SequenceSpec(SeededPerturbation(PolySpec.quadratic(0), (radius,), seed),
                        Bounds(2, 1.0, radius))


class TestSquareShadowing(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.cert = certify(SQUARE, LIGHT)

    def test_certificate(self):
        self.assertTrue(self.cert.passed)
        self.assertEqual(self.cert.N0, 1)

    def test_identity(self):
        z = cmath.exp(0.4j)
        self.assertEqual(shadow_conjugate(SQUARE, SQUARE, 0, z, 10, self.cert), z)

    def test_fixed_point_moves(self):
        z = shadow_conjugate(SQUARE, quadratic(0.01), 0, 1.0, 30, self.cert)
        self.assertLess(abs(z - beta_fixed_point(0.01)), 1e-8)

    def test_orbit_length(self):
        orbit = shadow_orbit(SQUARE, quadratic(0.01), 0, -1.0, 12, self.cert)
        self.assertEqual(len(orbit), 13)
        self.assertLess(abs(orbit[0] + beta_fixed_point(0.01)), 1e-3)

    def test_depth_sweep(self):
        spec1 = quadratic(0.01)
        previous = shadow_conjugate(SQUARE, spec1, 0, 1j, 2, self.cert)
        for k in range(3, 12):
            current = shadow_conjugate(SQUARE, spec1, 0, 1j, k, self.cert)
            self.assertLessEqual(abs(current - previous), 0.1 * 2.0 ** -(k - 1))
            previous = current

    def test_conjugacy_relation(self):
        spec1 = perturbed_square(0.01)
        for k in range(5):
            z = cmath.exp(2j * math.pi * k / 5)
            with self.subTest(z=z):
                h0 = shadow_conjugate(SQUARE, spec1, 0, z, 30, self.cert)
                h1 = shadow_conjugate(SQUARE, spec1, 1, z * z, 30, self.cert)
                self.assertLess(abs(spec1.polynomial(1)(h0) - h1), 1e-8)

    def test_move_points(self):
        roots = np.exp(2j * np.pi * np.arange(8) / 8)
        moved = move_points(SQUARE, quadratic(0.01), 0, roots, 20, self.cert)
        self.assertEqual(moved.shape, (8,))
        self.assertGreater(injectivity_gap(moved), 0.5)
        self.assertLess(np.max(np.abs(moved - roots)), 0.05)

    def test_holomorphic(self):
        defect = holomorphy_defect(LOOSE_SQUARE, (1, 0), 0, 0, 1.0, 20, self.cert)
        self.assertLess(defect, 1e-6)

    def test_needs_doubling_time(self):
        cert = certify(quadratic(0.25), CertifyConfig(m_max=2, n_max=6, grid=65, n0_max=2))
        self.assertIsNone(cert.N0)
        with self.assertRaises(ValueError):
            shadow_conjugate(SQUARE, quadratic(0.01), 0, 1.0, 4, cert)

    def test_lost_preimage(self):
        narrow = replace(self.cert, delta=0.01)
        with self.assertRaises(NoPreimageInDisc):
            shadow_conjugate(LOOSE_SQUARE, quadratic(-0.1, M=1.0), 0, 1j, 8, narrow)


class TestPaths(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.cert = certify(SQUARE, LIGHT)

    def test_straight(self):
        path = ParamPath.straight(LOOSE_SQUARE, [(1, 0)], [0], [0.08], steps=4)
        self.assertEqual(path.segments, 4)
        self.assertEqual(path.vector_at(1), (0.02 + 0j,))
        self.assertAlmostEqual(path.vector_at(2.5)[0], 0.05)
        self.assertEqual(path.spec_at(4).polynomial(1), PolySpec.quadratic(0.08))
        self.assertEqual(path.spec_at(4).polynomial(2), PolySpec.quadratic(0))
        with self.assertRaises(ValueError):
            path.vector_at(4.5)

    def test_validation(self):
        with self.assertRaises(ValueError):
            ParamPath(LOOSE_SQUARE, ((1, 0),), ())
        with self.assertRaises(ValueError):
            ParamPath(LOOSE_SQUARE, ((1, 0),), ((0, 0),))
        with self.assertRaises(ValueError):
            ParamPath.straight(LOOSE_SQUARE, [(1, 0)], [0], [0.08], max_step=0.01)
        with self.assertRaises(BoundsViolation):
            ParamPath.straight(LOOSE_SQUARE, [(1, 0)], [0], [0.5])

    def test_tail(self):
        path = ParamPath.tail(LOOSE_SQUARE, quadratic(0.05), 3, steps=2)
        self.assertEqual(path.slots, ((1, 0), (2, 0), (3, 0)))
        end = path.spec_at(2)
        self.assertEqual(end.polynomial(3), PolySpec.quadratic(0.05))
        self.assertEqual(end.polynomial(4), PolySpec.quadratic(0))

    def test_continuation_matches_direct(self):
        depth = 20
        path = ParamPath.tail(LOOSE_SQUARE, quadratic(0.05), depth * self.cert.N0, steps=5)
        result = continue_along_path(path, 0, 1j, depth, self.cert)
        direct = shadow_conjugate(LOOSE_SQUARE, path.spec_at(5), 0, 1j, depth, self.cert)
        self.assertLess(abs(result.point - direct), 1e-12)
        self.assertEqual(result.subdivisions, 0)
        self.assertEqual(result.depth, depth)

    def test_path_independence(self):
        depth = 20
        K = depth * self.cert.N0
        slots = [(m, 0) for m in range(1, K + 1)]
        straight = ParamPath.straight(LOOSE_SQUARE, slots, [0] * K, [0.05] * K, steps=2)
        bent = ParamPath(LOOSE_SQUARE, tuple(slots),
                         ((0,) * K, (0.03j,) * K, (0.05,) * K))
        a = continue_along_path(straight, 0, -1j, depth, self.cert).point
        b = continue_along_path(bent, 0, -1j, depth, self.cert).point
        self.assertLess(abs(a - b), 1e-6)

    def test_shadow_agrees_with_rays(self):
        depth = 20
        path = ParamPath.tail(LOOSE_SQUARE, quadratic(0.03), depth, steps=2)
        report = compare_motions(path, 0, [[0], [0.5]], depth, self.cert, t_min=1e-12)
        self.assertEqual(len(report.pairs), 2)
        self.assertLess(report.max_discrepancy, 1e-6)
        self.assertLess(abs(report.pairs[0].base - 1), 1e-6)


class TestRabbitMotion(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.cert = certify(RABBIT, LIGHT)

    def test_certificate(self):
        self.assertTrue(self.cert.passed, str(self.cert.verdict))

    def test_alpha_follows_parameter(self):
        c1 = RABBIT_C + 0.001
        alpha0, alpha1 = alpha_fixed_point(), alpha_fixed_point(c1)
        moved = shadow_conjugate(RABBIT, quadratic(c1), 0, alpha0, 6, self.cert)
        self.assertLess(abs(moved - alpha1), 0.1 * abs(alpha1 - alpha0))

    def test_co_landing_motion(self):
        depth = 8
        target = SequenceSpec(
            SeededPerturbation(PolySpec.quadratic(RABBIT_C), (0.002,), 9),
            Bounds(2, 1.0, abs(RABBIT_C) + 0.002))
        path = ParamPath.tail(LOOSE_RABBIT, target, depth * self.cert.N0, steps=2)
        report = compare_motions(path, 0, [RABBIT_ANGLES], depth, self.cert, t_min=DEEP)
        self.assertLess(report.max_discrepancy, 1e-6)

    def test_depth_sweep(self):
        spec1 = quadratic(RABBIT_C + 0.001)
        alpha0 = alpha_fixed_point()
        depths = range(2, 8)
        points = [shadow_conjugate(RABBIT, spec1, 0, alpha0, k, self.cert) for k in depths]
        gaps = [abs(b - a) for a, b in zip(points, points[1:])]
        # C' taken from the first gap, with room for two halvings
        bound = 4 * gaps[0]
        for i, gap in enumerate(gaps):
            with self.subTest(depth=depths[i + 1]):
                self.assertLessEqual(gap, bound * 0.5 ** i)
        alpha1 = alpha_fixed_point(RABBIT_C + 0.001)
        self.assertLess(abs(points[-1] - alpha1), 0.1 * abs(alpha1 - alpha0))

    def test_leaving_hyperbolic_component(self):
        path = ParamPath.tail(LOOSE_RABBIT, quadratic(0.3), 4 * self.cert.N0, steps=4)
        with self.assertRaises(PathNotContinuable) as cm:
            continue_along_path(path, 0, alpha_fixed_point(), 4, self.cert)
        self.assertIsInstance(cm.exception.cause,
                              (NoPreimageInDisc, AmbiguousPreimage, ExpansionLost))

    def test_broken_co_landing(self):
        with self.assertRaises(CoLandingBroken) as cm:
            ray_landing_motion(RABBIT, quadratic(-0.5), 0, RABBIT_ANGLES, t_min=1e-12)
        self.assertTrue(cm.exception.pairs)


class TestLandingMotion(unittest.TestCase):

    def test_base_must_co_land(self):
        with self.assertRaisesRegex(ValueError, "do not co-land for the base"):
            ray_landing_motion(SQUARE, quadratic(0.01), 0, [0, Fraction(1, 2)], t_min=1e-10)

    def test_same_sequence(self):
        landing = ray_landing_motion(SQUARE, SQUARE, 0, [Fraction(1, 3)], t_min=1e-10)
        self.assertLess(abs(landing - cmath.exp(2j * math.pi / 3)), 1e-8)

    def test_moved_fixed_point(self):
        landing = ray_landing_motion(SQUARE, quadratic(0.01), 0, [0], t_min=1e-10)
        self.assertLess(abs(landing - beta_fixed_point(0.01)), 1e-7)


class TestHausdorffDrift(unittest.TestCase):

    def test_drift(self):
        base = julia_sample(RABBIT, 0, grid=1025)
        distances = []
        for radius in (0.05, 0.025, 0.0125):
            sample = julia_sample(perturbed_rabbit(radius), 0, grid=1025)
            distances.append(hausdorff_distance(base.points, sample.points))
        self.assertGreater(distances[0], distances[1])
        self.assertGreater(distances[1], distances[2])
        self.assertLess(distances[-1], 0.05)


class TestDistances(unittest.TestCase):

    def test_hausdorff_circles(self):
        circle = np.exp(2j * np.pi * np.arange(400) / 400)
        self.assertAlmostEqual(hausdorff_distance(circle, 1.1 * circle), 0.1, places=12)
        self.assertEqual(hausdorff_distance(circle, circle), 0.0)

    def test_hausdorff_empty(self):
        with self.assertRaises(ValueError):
            hausdorff_distance([], [1j])

    def test_injectivity(self):
        self.assertAlmostEqual(injectivity_gap([0, 1, 3j, 1 + 0.5j]), 0.5)
        with self.assertRaises(ValueError):
            injectivity_gap([1])


if __name__ == "__main__":
    unittest.main()
