import math
import unittest
from fractions import Fraction

from iterjulia.utils import RABBIT_C, as_turns, pretty_angle, same_kind, wrap_phase


class TestUtils(unittest.TestCase):

    def test_as_turns(self):
        self.assertEqual(as_turns(Fraction(9, 7)), Fraction(2, 7))
        self.assertEqual(as_turns(-0.25), Fraction(3, 4))
        self.assertEqual(as_turns(3), 0)
        self.assertEqual(as_turns("1/7"), Fraction(1, 7))
        # Floats convert exactly
        self.assertEqual(as_turns(0.1), Fraction(0.1))
        self.assertNotEqual(as_turns(0.1), Fraction(1, 10))

    def test_same_kind(self):
        self.assertIsInstance(same_kind(Fraction(1, 4), 0.5), float)
        self.assertEqual(same_kind(Fraction(1, 4), Fraction(1, 2)), Fraction(1, 4))

    def test_pretty_angle(self):
        self.assertEqual(pretty_angle(Fraction(2, 7)), "2/7")
        self.assertEqual(pretty_angle(0), "0")
        self.assertEqual(pretty_angle(0.5), "1/2")
        self.assertEqual(pretty_angle(Fraction(1, 8191)), f"{1 / 8191:.10g}")

    def test_wrap_phase(self):
        self.assertAlmostEqual(wrap_phase(3 * math.pi / 2), -math.pi / 2)
        self.assertEqual(wrap_phase(-math.pi), math.pi)
        self.assertEqual(wrap_phase(math.pi), math.pi)
        self.assertAlmostEqual(wrap_phase(4 * math.pi + 0.1), 0.1)

    def test_rabbit_parameter(self):
        # The alpha fixed point is repelling with rotation number 1/3
        alpha = (1 - (1 - 4 * RABBIT_C) ** 0.5) / 2
        multiplier = 2 * alpha
        self.assertAlmostEqual(abs(multiplier), 1.107, places=2)
        self.assertAlmostEqual((math.atan2(multiplier.imag, multiplier.real) / (2 * math.pi)) % 1,
                               1 / 3, places=2)


if __name__ == "__main__":
    unittest.main()
