""" Tests for the smpd command line tool. """
from pathlib import Path

import pytest

from smpd.tools.runner.runner import EXIT_ERROR, EXIT_FAIL, EXIT_PASS, main


DATA = Path(__file__).parent / 'data' / 'params'


def _exit_code(argv: list[str]) -> int:
    with pytest.raises(SystemExit) as e:
        main(argv)
    return e.value.code


class TestRun:
    """ Tests for the run command. """

    def test_pass(self, tmp_path: Path, capsys):
        """ A passing scenario exits with 0 and prints its summary. """
        out = tmp_path / 'report'
        assert _exit_code(['run', 'sensitivity-report', '-o', str(out)]) == EXIT_PASS

        assert 'Result: PASS' in capsys.readouterr().out
        assert (out / 'summary.json').exists()
        assert (out / 'budget.csv').exists()

    def test_fail(self, tmp_path: Path, capsys):
        """ A missed target exits with 1. """
        argv = ['run', 'sensitivity-report', '-o', str(tmp_path), '--set', 't1_us=20']
        assert _exit_code(argv) == EXIT_FAIL
        assert 'Result: FAIL' in capsys.readouterr().out

    def test_parameter_file(self, tmp_path: Path):
        """ The parameter file is named in the summary. """
        config = DATA / 'cold_device.yaml'
        _exit_code(['run', 'sensitivity-report', '-c', str(config), '-s', '3', '-o', str(tmp_path)])

        summary = (tmp_path / 'summary.txt').read_text(encoding='utf-8')
        assert summary.startswith('Scenario sensitivity-report (seed 3)')
        assert f'Parameter file: {config}' in summary

    def test_unknown_scenario(self, tmp_path: Path):
        """ Unknown scenarios are errors. """
        assert _exit_code(['run', 'figure-7', '-o', str(tmp_path)]) == EXIT_ERROR

    def test_bad_override(self, tmp_path: Path):
        """ Overrides must be known keys with valid values. """
        assert _exit_code(['run', 'sensitivity-report', '-o', str(tmp_path), '--set', 'flux_capacitor=1']) \
            == EXIT_ERROR
        assert _exit_code(['run', 'sensitivity-report', '-o', str(tmp_path), '--set', 't1_us']) == EXIT_ERROR
        assert _exit_code(['run', 'sensitivity-report', '-o', str(tmp_path), '--set', 't1_us=-5']) \
            == EXIT_ERROR


def test_list_scenarios(capsys):
    """ One line per scenario with its target names. """
    assert _exit_code(['list-scenarios']) == EXIT_PASS

    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 9
    assert lines[0].startswith('tuning-curves')
    assert 'buffer_tuning_range_mhz' in lines[0]
    assert any(line.startswith('optimize') and 'oracle_cells' in line for line in lines)


class TestValidate:
    """ Tests for the validate command. """

    def test_valid(self, capsys):
        """ A valid file prints its figures of merit. """
        assert _exit_code(['validate', '-c', str(DATA / 'coherent_signal.yaml')]) == EXIT_PASS

        out = capsys.readouterr().out
        assert 'coherent_signal.yaml: valid' in out
        assert 'eta_smpd    0.7434' in out

    def test_invalid(self):
        """ Invalid files exit with 2. """
        assert _exit_code(['validate', '-c', str(DATA / 'negative_t1.yaml')]) == EXIT_ERROR
        assert _exit_code(['validate', '-c', str(DATA / 'unknown_key.yaml')]) == EXIT_ERROR
        assert _exit_code(['validate', '-c', str(DATA / 'missing.yaml')]) == EXIT_ERROR

    def test_config_required(self):
        """ validate needs a parameter file. """
        assert _exit_code(['validate']) == 2
