import re
import subprocess

import pytest

from dedlog.codegen import emit_access_functions, emit_program, emit_rule_function

from conftest import GOLDEN, corpus_program, load_program


FIG7_SRC = ".decl p(int)\n.decl q(int)\np(1)@0.\np(A) :- q(A), p(B), A < B.\n"


class TestRuleFunction:
    def test_golden_nested_loop_join(self):
        analysis = load_program(FIG7_SRC)
        plan = analysis.plans[0]
        text = emit_rule_function(plan, analysis.layout, "deductive_rule_1")
        assert text + "\n" == (GOLDEN / "deductive_rule.c").read_text()

    def test_output_rule_splices_verbatim(self):
        analysis = load_program(".decl pressed\npressed@0.\n#digitalWrite(13, #HIGH) :- pressed.\n")
        plan = analysis.plans[0]
        text = emit_rule_function(plan, analysis.layout, "output_rule_1")
        assert "digitalWrite(13, HIGH);" in text
        assert "pressed_x(" in text

    def test_inductive_rule_targets_next_buffer(self):
        analysis = load_program(
            ".decl on_since(unsigned long)\n.decl turn_off\non_since(1)@0.\n"
            "on_since(P)@next :- !turn_off, on_since(P).\n"
        )
        text = emit_rule_function(analysis.plans[0], analysis.layout, "inductive_rule_1")
        assert "insert_on_since(next_buff, P);" in text
        assert "turn_off_x(curr_buff) == 0" in text

    def test_input_rule_guard(self):
        analysis = load_program(".decl pressed\npressed@next :- #digitalRead(2, #HIGH).\n")
        text = emit_rule_function(analysis.plans[0], analysis.layout, "input_rule_1")
        assert "int V = digitalRead(2);" in text
        assert "(int16_t)V == HIGH" in text
        assert "insert_pressed(next_buff);" in text

    def test_unsigned_comparison_routes_through_casts(self):
        analysis = load_program(
            ".decl turn_off\n.decl on_since(unsigned long)\n.decl now(unsigned long)\n"
            "on_since(0)@0.\nturn_off :- on_since(P), now(T), P+1000 < T.\n"
        )
        text = emit_rule_function(analysis.plans[0], analysis.layout, "deductive_rule_1")
        assert "(uint32_t)((uint32_t)P + (uint32_t)1000) < T" in text


class TestAccessFunctions:
    def test_per_predicate_surface(self):
        analysis = load_program(FIG7_SRC)
        text = emit_access_functions(analysis.layout)
        for name in ("p_f", "p_b", "q_f", "q_b", "p_arg1", "q_arg1", "insert_p", "insert_q"):
            assert re.search(rf"\b{name}\(", text), name
        assert "switch_buffers" in text and "clear_buffer" in text

    def test_nullary_finder_uses_x_suffix(self):
        analysis = load_program(".decl pressed\npressed@0.\n")
        text = emit_access_functions(analysis.layout)
        assert "pressed_x(" in text
        assert "insert_pressed(uint8_t *buf)" in text

    def test_only_registered_patterns_emitted(self):
        analysis = load_program(FIG7_SRC)
        text = emit_access_functions(analysis.layout)
        assert "q_bf" not in text and "p_bf" not in text

    def test_unused_value_types_not_emitted(self):
        analysis = load_program(".decl p(int)\np(1)@0.\n")
        text = emit_access_functions(analysis.layout)
        assert "write_int_val" in text
        assert "write_ulong_val" not in text and "write_byte_val" not in text


class TestProgramEmission:
    def test_sizes_and_numbers(self):
        analysis = load_program(".decl p(int)\n.decl q(byte, int)\np(1)@0.\n")
        text = emit_program(analysis).source_text
        assert "#define num_of_p 1" in text
        assert "#define num_of_q 2" in text
        assert "#define size_of_p 3" in text
        assert "#define size_of_q 4" in text

    def test_blink_loop_structure(self):
        analysis = corpus_program("blink.dl")
        text = emit_program(analysis).source_text
        loop = text[text.index("void loop(void)"):]
        assert loop.count("do {") == 1
        assert len(re.findall(r"output_rule_\d+\(\);", loop)) == 3
        assert len(re.findall(r"inductive_rule_\d+\(\);", loop)) == 4
        assert len(re.findall(r"input_rule_\d+\(\);", loop)) == 1
        assert loop.rstrip().endswith("switch_buffers();\n}")
        # phase ordering: outputs before inductives before inputs
        assert loop.index("output_rule_1") < loop.index("inductive_rule_1") < loop.index("input_rule_1")

    def test_empty_program_loop(self):
        analysis = load_program("")
        text = emit_program(analysis).source_text
        loop = text[text.index("void loop(void)"):]
        body = loop[loop.index("{") + 1 : loop.index("}")].strip()
        assert body == "switch_buffers();"

    def test_touchblink_setup_inserts_fact(self):
        analysis = corpus_program("touchblink.dl")
        text = emit_program(analysis).source_text
        setup = text[text.index("void setup(void)"):text.index("void loop(void)")]
        assert "insert_setup(curr_buff);" in setup
        assert "/* Facts for timestamp 0 */" in setup
        assert "/* Buffer initialization */" in setup

    def test_device_mode_headers(self):
        analysis = load_program(".decl p(int)\np(1)@0.\n")
        unit = emit_program(analysis)
        assert "#include <Arduino.h>" in unit.source_text
        assert unit.required_headers == ("Arduino.h",)
        assert "ded_fault" in unit.source_text

    def test_host_mode_headers(self):
        analysis = load_program("")
        unit = emit_program(analysis, arduino_header=False)
        assert '#include "arduino_shim.h"' in unit.source_text
        assert "dump_current_facts" in unit.source_text

    def test_no_dynamic_allocation_or_recursion(self):
        analysis = corpus_program("blink.dl")
        text = emit_program(analysis).source_text
        assert "malloc" not in text and "calloc" not in text
        # rule functions never call themselves
        for name in re.findall(r"static bool (\w+)\(void\)", text):
            body_match = re.search(
                rf"static bool {name}\(void\) \{{(.*?)\n\}}", text, re.DOTALL
            )
            assert name not in body_match.group(1)

    def test_emission_deterministic(self):
        a = emit_program(corpus_program("blink.dl")).source_text
        b = emit_program(corpus_program("blink.dl")).source_text
        assert a == b

    @pytest.mark.parametrize(
        "source",
        ["", ".decl p(int)\n", "corpus:blink.dl", "corpus:touchblink.dl", "corpus:macroblink.dl"],
    )
    def test_device_mode_compiles_strictly(self, cc, source, tmp_path):
        # a stub Arduino.h is enough to typecheck the device-mode output
        stub = tmp_path / "Arduino.h"
        stub.write_text(
            "#ifndef ARDUINO_H\n#define ARDUINO_H\n#include <stdint.h>\n"
            "#define HIGH 1\n#define LOW 0\n#define INPUT 0\n#define OUTPUT 1\n"
            "void pinMode(uint8_t pin, uint8_t mode);\n"
            "void digitalWrite(uint8_t pin, uint8_t val);\n"
            "int digitalRead(uint8_t pin);\n"
            "unsigned long millis(void);\n#endif\n"
        )
        if source.startswith("corpus:"):
            from conftest import CORPUS

            source = (CORPUS / source.removeprefix("corpus:")).read_text()
        analysis = load_program(source)
        c_file = tmp_path / "prog.c"
        c_file.write_text(emit_program(analysis).source_text)
        result = subprocess.run(
            [cc, "-std=c99", "-Wall", "-Wextra", "-Werror", "-c",
             "-I", str(tmp_path), str(c_file), "-o", str(tmp_path / "prog.o")],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0, result.stderr

    def test_multi_stratum_loops(self):
        analysis = load_program(".decl a\n.decl b\n.decl c\na@0.\nb :- a.\nc :- !b.\n")
        text = emit_program(analysis).source_text
        assert "stratum 0" in text and "stratum 1" in text
        loop = text[text.index("void loop(void)"):]
        assert loop.count("do {") == 2

    def test_prefix_heavy_names_stay_distinct(self):
        # predicate names that look like generated identifiers must not
        # collide with the real access functions
        analysis = load_program(
            ".decl p(int)\n.decl insert_p\n.decl size_of_p\np(1)@0.\n"
            "insert_p :- p(X).\nsize_of_p :- insert_p.\n"
        )
        text = emit_program(analysis).source_text
        assert "insert_insert_p(" in text
        assert "insert_size_of_p(" in text
        # every generated definition name is unique
        names = re.findall(
            r"^static (?:inline )?(?:\w+\s+)+\*?(\w+)\(", text, re.MULTILINE
        )
        assert names and len(names) == len(set(names))
