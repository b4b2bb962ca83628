import unittest

from report import CheckReport, SuiteReport


class ReportTest(unittest.TestCase):
    def test_check_report(self) -> None:
        report = CheckReport("mem-inj")
        self.assertTrue(report.ok)
        self.assertEqual(report.summary(), "mem-inj: ok")
        self.assertIsNone(report.first())

        self.assertTrue(report.check(True, "1", "unused"))
        self.assertFalse(report.check(False, "2", "values differ", [1, 0]))
        self.assertFalse(report.ok)
        self.assertEqual(report.clauses(), ["2"])
        self.assertEqual(report.summary(), "mem-inj: [2] values differ")
        self.assertEqual(report.to_json()["violations"], [{"clause": "2", "message": "values differ",
                                                            "witness": [1, 0]}])

    def test_merge_prefixes_clauses(self) -> None:
        inner = CheckReport("inner")
        inner.fail("incr", "lost a mapping")
        outer = CheckReport("outer").merge(inner, "j12:").merge(inner)
        self.assertEqual(outer.clauses(), ["j12:incr", "incr"])

    def test_suite_report(self) -> None:
        suite = SuiteReport("interpolation")
        suite.record(CheckReport("ok"))
        suite.record_vacuous()
        bad = CheckReport("bad")
        bad.fail("x", "broken")
        suite.record(bad, sample={"seed": 3})
        self.assertEqual((suite.instances, suite.vacuous, len(suite.failures)), (3, 1, 1))
        self.assertFalse(suite.ok)
        self.assertEqual(suite.failures[0]["sample"], {"seed": 3})

        other = SuiteReport("more", instances=2, vacuous=1)
        suite.merge(other)
        suite.details["law"] = "injp-idem"
        self.assertEqual(suite.to_json(), {"name": "interpolation", "instances": 5, "vacuous": 2,
                                           "failures": suite.failures, "law": "injp-idem"})
