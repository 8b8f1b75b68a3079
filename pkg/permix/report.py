#!/usr/bin/env python3
'''
Check and Report records shared by the library and the command line.

Every asserted inequality or identity is kept as a Check with its two sides and
margin so that a report shows how close each one came to failing.
'''

from __future__ import annotations

import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from .default.exceptions import BoundViolation
from .sharedutils import leq


@dataclass(frozen=True)
class Check:
    name: str
    lhs: float
    rhs: float
    relation: str
    margin: float
    passed: bool

    def require(self) -> None:
        if not self.passed:
            raise BoundViolation(f'{self.name}: {self.lhs!r} {self.relation} {self.rhs!r} failed (margin {self.margin!r})')

    def to_dict(self) -> Dict[str, Any]:
        return {'name': self.name, 'lhs': self.lhs, 'relation': self.relation, 'rhs': self.rhs,
                'margin': self.margin, 'passed': self.passed}


def check_leq(name: str, lhs: float, rhs: float, rel: float = 1e-8, abs_tol: float = 0.0) -> Check:
    lhs, rhs = float(lhs), float(rhs)
    margin = rhs - lhs if not (math.isinf(rhs) and math.isinf(lhs)) else 0.0
    return Check(name, lhs, rhs, '<=', margin, leq(lhs, rhs, rel, abs_tol))


def check_close(name: str, lhs: float, rhs: float, rel: float = 1e-8, abs_tol: float = 0.0) -> Check:
    lhs, rhs = float(lhs), float(rhs)
    if math.isinf(lhs) or math.isinf(rhs):
        passed = lhs == rhs
        margin = 0.0 if passed else -math.inf
    else:
        allowed = abs_tol + rel * max(abs(lhs), abs(rhs))
        margin = allowed - abs(lhs - rhs)
        passed = margin >= 0
    return Check(name, lhs, rhs, '==', margin, passed)


def require_all(checks: List[Check]) -> None:
    for check in checks:
        check.require()


def jsonable(value: Any) -> Any:
    '''Convert numpy scalars/arrays, dataclass-like objects and infinities to plain JSON values'''
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, Check):
        return jsonable(value.to_dict())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return {'re': jsonable(float(value.real)), 'im': jsonable(float(value.imag))}
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return 'nan'
        if math.isinf(v):
            return 'inf' if v > 0 else '-inf'
        return v
    if hasattr(value, 'to_dict'):
        return jsonable(value.to_dict())
    return value


def inputs_digest(inputs: Any) -> str:
    canonical = json.dumps(jsonable(inputs), sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode()).hexdigest()


@dataclass
class Report:
    command: str
    inputs: Dict[str, Any]
    seed: Optional[int] = None
    results: Dict[str, Any] = field(default_factory=dict)
    checks: List[Check] = field(default_factory=list)
    table: Optional[List[Dict[str, Any]]] = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def extend(self, checks: List[Check], prefix: str = '') -> None:
        for c in checks:
            self.checks.append(Check(f'{prefix}{c.name}', c.lhs, c.rhs, c.relation, c.margin, c.passed))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'command': self.command,
            'inputs_digest': inputs_digest(self.inputs),
            'inputs': self.inputs,
            'seed': self.seed,
            'results': self.results,
            'checks': [c.to_dict() for c in self.checks],
            'passed': self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(jsonable(self.to_dict()), indent=2) + '\n'

    def to_csv(self) -> str:
        '''The command's principal table, or the check list when it has none'''
        rows = self.table if self.table is not None else [c.to_dict() for c in self.checks]
        buffer = io.StringIO()
        pd.DataFrame(jsonable(rows)).to_csv(buffer, index=False)
        return buffer.getvalue()
