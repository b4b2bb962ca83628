import tempfile
import unittest
from pathlib import Path

import mast
from asm import AsmProgram
from errors import ParseError
from library import PROGRAMS_DIR, load_miniasm, load_minic, load_module, program_path


class LibraryTest(unittest.TestCase):
    def test_bundled_programs(self) -> None:
        self.assertEqual(program_path("client.mc"), PROGRAMS_DIR / "client.mc")
        self.assertIsInstance(load_minic("client.mc"), mast.Program)
        self.assertIsInstance(load_miniasm("server.ma"), AsmProgram)
        for name in ["client.mc", "client_mr.mc", "double_key.mc", "sum_f.mc",
                     "server.ma", "server_opt.ma", "sum_g.ma"]:
            self.assertIsNotNone(load_module(name), name)

    def test_wrong_kind_of_module(self) -> None:
        with self.assertRaises(ParseError):
            load_minic("server.ma")
        with self.assertRaises(ParseError):
            load_miniasm("client.mc")

    def test_files_outside_the_bundle(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            source = Path(tmp) / "one.mc"
            source.write_text("int one() { return 1; }\n")
            self.assertEqual(program_path(str(source)), source)
            fn = load_minic(str(source)).function("one")
            self.assertIsNotNone(fn)

            other = Path(tmp) / "notes.txt"
            other.write_text("int one;\n")
            with self.assertRaises(ParseError):
                load_module(str(other))
