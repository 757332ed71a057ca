"""
Reference targets, verdicts and the files a scenario emits.

The verdict logic is a pure function of the computed values and the
exposure times, so summary.json can be re-evaluated without running the
scenario again.
"""
from __future__ import annotations

import csv
import importlib.resources
import json
import logging
import math

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import jinja2
import yaml

from smpd import data
from smpd.common import InvalidConfiguration
from smpd.common.types.tolerance_kind import ToleranceKind
from smpd.common.types.verdict import Verdict


TARGETS_FILE = 'targets.yaml'
SUMMARY_TEMPLATE = 'summary.txt.j2'
TARGETS_VERSION = 1


TargetValue = Optional[float | tuple[float, float]]


@dataclass(frozen=True)
class Target:
    """ Reference value of one computed quantity. """

    name: str
    target: TargetValue
    tolerance: float
    kind: ToleranceKind
    anchor: str = ''
    # Name of a computed value used as target.
    reference: Optional[str] = None

    @classmethod
    def from_dict(cls, entry: dict[str, Any]) -> Target:
        """ Parse one entry of the targets file. """
        name = entry.get('name', None)
        if not name:
            raise InvalidConfiguration(f'Target without name: {entry}')

        kind = ToleranceKind.from_str(entry.get('kind', None))
        if kind is None:
            raise InvalidConfiguration(f'Unknown tolerance kind {entry.get("kind")} of target {name}!')

        value = entry.get('target', None)
        if isinstance(value, list):
            if kind != ToleranceKind.RANGE or len(value) != 2:
                raise InvalidConfiguration(f'Only range targets are lists of two values, see {name}!')
            value = (float(value[0]), float(value[1]))
        elif value is not None:
            value = float(value)

        reference = entry.get('reference', None)
        if kind != ToleranceKind.NONE and value is None and reference is None:
            raise InvalidConfiguration(f'Target {name} needs a target value or a reference!')
        if kind == ToleranceKind.RANGE and not isinstance(value, tuple):
            raise InvalidConfiguration(f'Range target {name} needs [low, high]!')

        return cls(
            name=name,
            target=value,
            tolerance=float(entry.get('tolerance', 0.0)),
            kind=kind,
            anchor=entry.get('anchor', ''),
            reference=reference
        )

    def as_dict(self) -> dict[str, Any]:
        """ Entry as written to the targets file. """
        result: dict[str, Any] = {
            'name': self.name,
            'target': list(self.target) if isinstance(self.target, tuple) else self.target,
            'tolerance': self.tolerance,
            'kind': str(self.kind),
            'anchor': self.anchor,
        }
        if self.reference:
            result['reference'] = self.reference
        return result


@dataclass(frozen=True)
class ScenarioTargets:
    """ Overrides, inputs and targets of one scenario. """

    overrides: dict[str, Any] = field(default_factory=dict)
    inputs: dict[str, Any] = field(default_factory=dict)
    targets: tuple[Target, ...] = ()


def load_targets(path: Optional[Path | str] = None) -> dict[str, ScenarioTargets]:
    """ Load the targets file, by default the packaged one. """
    if path is None:
        source = importlib.resources.files(data) / TARGETS_FILE
        with source.open('r', encoding='utf-8') as f:
            content = yaml.load(f, yaml.SafeLoader)
    else:
        with Path(path).open('r', encoding='utf-8') as f:
            content = yaml.load(f, yaml.SafeLoader)

    if not isinstance(content, dict) or content.get('version', None) != TARGETS_VERSION:
        raise InvalidConfiguration(f'Targets file must be version {TARGETS_VERSION}!')

    result = {}
    for name, scenario in (content.get('scenarios', None) or {}).items():
        scenario = scenario or {}
        result[name] = ScenarioTargets(
            overrides=dict(scenario.get('overrides', None) or {}),
            inputs=dict(scenario.get('inputs', None) or {}),
            targets=tuple(Target.from_dict(t) for t in scenario.get('targets', None) or [])
        )
    return result


@dataclass(frozen=True)
class Check:
    """ Comparison of one computed value with its target. """

    name: str
    computed: float
    target: TargetValue
    tolerance: float
    kind: ToleranceKind
    verdict: Verdict
    anchor: str = ''
    reference: Optional[str] = None
    # Measurement time of Poisson checks.
    exposure: Optional[float] = None

    @property
    def target_text(self) -> str:
        """ Target formatted for the summary table. """
        if self.target is None:
            return '-'
        if isinstance(self.target, tuple):
            return f'[{self.target[0]:.4g}, {self.target[1]:.4g}]'
        return f'{self.target:.6g}'

    @property
    def tolerance_text(self) -> str:
        """ Tolerance formatted for the summary table. """
        if self.kind == ToleranceKind.RELATIVE:
            return f'±{100.0 * self.tolerance:g}%'
        if self.kind == ToleranceKind.ABSOLUTE:
            return f'±{self.tolerance:g}'
        if self.kind == ToleranceKind.FACTOR:
            return f'×/÷{self.tolerance:g}'
        if self.kind == ToleranceKind.POISSON:
            return f'{self.tolerance:g}σ'
        if self.kind == ToleranceKind.UPPER_BOUND:
            return '<='
        return str(self.kind)

    def as_dict(self) -> dict[str, Any]:
        """ Entry of summary.json. """
        return {
            'name': self.name,
            'computed': self.computed,
            'target': list(self.target) if isinstance(self.target, tuple) else self.target,
            'tolerance': self.tolerance,
            'kind': str(self.kind),
            'verdict': str(self.verdict),
            'anchor': self.anchor,
            'reference': self.reference,
            'exposure': self.exposure,
        }


def _verdict(ok: bool) -> Verdict:
    return Verdict.PASS if ok else Verdict.FAIL


def evaluate(target: Target, computed: dict[str, float], exposure: Optional[dict[str, float]] = None) -> Check:
    """
    Compare the computed value of target.name with its target.

    Missing or non-finite values fail, except for informational targets.
    Poisson tolerances are in standard deviations √(target/exposure) of a
    rate measured over the exposure time of the value.
    """
    exposure = exposure or {}
    value = computed.get(target.name, math.nan)
    value = float(value) if value is not None else math.nan

    reference: TargetValue = target.target
    if target.reference is not None:
        reference = computed.get(target.reference, math.nan)

    time = exposure.get(target.name, None)

    def _check(verdict: Verdict) -> Check:
        return Check(name=target.name, computed=value, target=reference, tolerance=target.tolerance,
                     kind=target.kind, verdict=verdict, anchor=target.anchor, reference=target.reference,
                     exposure=time)

    if target.kind == ToleranceKind.NONE:
        return _check(Verdict.INFO)
    if not math.isfinite(value):
        return _check(Verdict.FAIL)

    if target.kind == ToleranceKind.RANGE:
        assert isinstance(reference, tuple)
        return _check(_verdict(reference[0] <= value <= reference[1]))

    assert not isinstance(reference, tuple)
    if reference is None or not math.isfinite(reference):
        return _check(Verdict.FAIL)

    deviation = abs(value - reference)
    if target.kind == ToleranceKind.ABSOLUTE:
        ok = deviation <= target.tolerance
    elif target.kind == ToleranceKind.RELATIVE:
        ok = deviation <= target.tolerance * abs(reference)
    elif target.kind == ToleranceKind.FACTOR:
        ok = reference > 0 and reference / target.tolerance <= value <= reference * target.tolerance
    elif target.kind == ToleranceKind.UPPER_BOUND:
        ok = value <= reference + target.tolerance
    elif target.kind == ToleranceKind.POISSON:
        if time is None or not time > 0:
            logging.error('Poisson target %s has no exposure time.', target.name)
            return _check(Verdict.FAIL)
        ok = deviation <= target.tolerance * math.sqrt(max(reference, 0.0) / time)
    else:
        raise InvalidConfiguration(f'Unsupported tolerance kind {target.kind} of {target.name}!')

    return _check(_verdict(ok))


def evaluate_all(
    targets: Iterable[Target],
    computed: dict[str, float],
    exposure: Optional[dict[str, float]] = None
) -> list[Check]:
    """ Checks of all targets. """
    return [evaluate(t, computed, exposure) for t in targets]


def overall_verdict(checks: Sequence[Check]) -> Verdict:
    """ FAIL if any check failed, else PASS. """
    return Verdict.FAIL if any(c.verdict == Verdict.FAIL for c in checks) else Verdict.PASS


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    """ Write a curve as CSV, floats with their shortest exact representation. """
    with path.open('w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    logging.debug('Wrote %s', path)


def _json_value(value: Any) -> Any:
    """ NaN and inf are not valid JSON, they are written as strings. """
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {k: _json_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    return value


def _from_json(value: Any) -> Any:
    if value in ('nan', 'inf', '-inf'):
        return float(value)
    return value


def write_summary_json(
    path: Path,
    scenario: str,
    seed: int,
    checks: Sequence[Check],
    computed: dict[str, float],
    exposure: dict[str, float],
    metadata: Optional[dict[str, Any]] = None
) -> None:
    """ Write summary.json with all computed values and the checks. """
    summary = {
        'scenario': scenario,
        'seed': seed,
        'verdict': str(overall_verdict(checks)),
        'checks': [c.as_dict() for c in checks],
        'computed': computed,
        'exposure': exposure,
        'metadata': metadata or {},
    }
    with path.open('w', encoding='utf-8') as f:
        json.dump(_json_value(summary), f, indent=2, sort_keys=True)
        f.write('\n')


def reevaluate(path: Path | str) -> list[Check]:
    """ Evaluate the checks of a summary.json again from its computed values. """
    with Path(path).open('r', encoding='utf-8') as f:
        summary = json.load(f)

    computed = {k: _from_json(v) for k, v in summary.get('computed', {}).items()}
    exposure = summary.get('exposure', {})
    checks = []
    for entry in summary.get('checks', []):
        target = Target.from_dict({
            'name': entry['name'],
            'target': None if entry.get('reference') else _from_json(entry.get('target')),
            'tolerance': entry.get('tolerance', 0.0),
            'kind': entry.get('kind'),
            'anchor': entry.get('anchor', ''),
            'reference': entry.get('reference'),
        })
        checks.append(evaluate(target, computed, exposure))
    return checks


def render_summary(
    scenario: str,
    seed: int,
    checks: Sequence[Check],
    files: Sequence[str] = (),
    parameters: Optional[str] = None
) -> str:
    """ Text summary of the checks. """
    source = importlib.resources.files(data) / SUMMARY_TEMPLATE
    template = jinja2.Template(source.read_text('utf-8'), trim_blocks=True)
    return template.render(
        scenario=scenario,
        seed=seed,
        checks=checks,
        files=files,
        parameters=parameters,
        verdict=overall_verdict(checks),
        passed=sum(1 for c in checks if c.verdict == Verdict.PASS),
        failed=sum(1 for c in checks if c.verdict == Verdict.FAIL),
        info=sum(1 for c in checks if c.verdict == Verdict.INFO)
    )
