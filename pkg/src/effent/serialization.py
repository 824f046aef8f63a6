"""
Module for the JSON and CSV formats read and written by effent.

Matrices are {"rows": n, "cols": m, "data": [[re, im], ...]} with the entries in row-major order; this is also the
form written. Nested lists of rows and {"re": rows, "im": rows} are read as well. An entry is a real number or a
[re, im] pair. States are counted matrices with "dims", {"dims": [...], "matrix": <matrix>} or {"dims": [...], "ket": [...]}.
Channels are {"d_in": n, "d_out": m, "kraus": [<matrix>, ...], "cptp": bool} with optional "dims_in"/"dims_out".
Games are {"p": [...], "q": [...], "zeta": [<state>...], "eta": [<state>...], "payoff": 4-d nested array}.
"""
from __future__ import annotations
from typing import TYPE_CHECKING

import csv
import json
import logging

import numpy as np

from effent.errors import ValidationError, DimensionError
from effent.qcore import DensityMatrix, PureState
from effent.channels import KrausChannel, PovmSet
from effent.games import GameSpec

if TYPE_CHECKING:
    from typing import Any, Dict, List, Optional, Sequence
    from effent.bec import SweepRow

LOG: logging.Logger = logging.getLogger("effent.serialization")

SIGNIFICANT_DIGITS: int = 12


def load_json(path: str) -> Any:
    """
    Reads a JSON document.

    Raises:
        ValidationError: If the file cannot be read or is not valid JSON.
    """
    try:
        with open(path, 'r', encoding='utf-8') as json_file:
            return json.load(json_file)
    except json.JSONDecodeError as err:
        raise ValidationError(f'{path} is not valid JSON: {err.msg} (line {err.lineno})') from err
    except OSError as err:
        raise ValidationError(f'Cannot read {path}: {err.strerror}') from err


def _entry(value: Any, name: str) -> complex:
    if isinstance(value, bool):
        raise ValidationError(f'{name}: booleans are not matrix entries')
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return complex(value[0], value[1])
    raise ValidationError(f'{name}: entry {value!r} is neither a number nor a [re, im] pair')


def parse_vector(data: Any, name: str = 'vector') -> np.ndarray:
    """Parses a list of numbers or [re, im] pairs."""
    if not isinstance(data, list) or len(data) == 0:
        raise ValidationError(f'{name} must be a non-empty list')
    return np.array([_entry(value, name) for value in data], dtype=np.complex128)


def _counted_matrix(data: Dict[str, Any], name: str) -> np.ndarray:
    rows: Any = data.get('rows')
    cols: Any = data.get('cols')
    if not all(isinstance(count, int) and not isinstance(count, bool) and count > 0 for count in (rows, cols)):
        raise ValidationError(f'{name}: "rows" and "cols" must be positive integers')
    entries: Any = data.get('data')
    if not isinstance(entries, list):
        raise ValidationError(f'{name}.data must be a list of entries')
    if len(entries) != rows * cols:
        raise DimensionError(f'{name}: rows*cols = {rows * cols} but "data" has {len(entries)} entries')
    return np.array([_entry(value, f'{name}.data') for value in entries], dtype=np.complex128).reshape(rows, cols)


def parse_matrix(data: Any, name: str = 'matrix') -> np.ndarray:
    """
    Parses a matrix given as {"rows": n, "cols": m, "data": [...]} with row-major entries, as rows of entries
    or as {"re": rows, "im": rows}.
    """
    if isinstance(data, dict):
        if 'data' in data:
            return _counted_matrix(data, name)
        if 're' not in data:
            raise ValidationError(f'{name}: object form needs "rows", "cols" and "data" or a "re" field')
        real: np.ndarray = np.asarray(data['re'], dtype=float)
        imag: np.ndarray = np.asarray(data.get('im', np.zeros_like(real)), dtype=float)
        if real.shape != imag.shape or real.ndim != 2:
            raise ValidationError(f'{name}: "re" and "im" must be matrices of the same shape')
        return real + 1j * imag
    if not isinstance(data, list) or len(data) == 0 or not all(isinstance(row, list) for row in data):
        raise ValidationError(f'{name} must be a non-empty list of rows')
    width: int = len(data[0])
    if any(len(row) != width for row in data):
        raise ValidationError(f'{name}: rows have different lengths')
    return np.array([[_entry(value, name) for value in row] for row in data], dtype=np.complex128)


def matrix_to_json(matrix: np.ndarray) -> Dict[str, Any]:
    """{"rows": n, "cols": m, "data": [[re, im], ...]} in row-major order."""
    array: np.ndarray = np.asarray(matrix, dtype=np.complex128)
    return {'rows': array.shape[0], 'cols': array.shape[1], 'data': [[float(v.real), float(v.imag)] for v in array.reshape(-1)]}


def state_from_json(data: Any, tol: Optional[float] = None, name: str = 'state') -> DensityMatrix:
    """
    Builds a density matrix from its JSON object, or from a bare matrix.

    The object is a counted matrix with "dims", or carries its matrix under "matrix" or its amplitudes under "ket".
    """
    if isinstance(data, list):
        return DensityMatrix(parse_matrix(data, name), tol=tol)
    if not isinstance(data, dict):
        raise ValidationError(f'{name} must be a JSON object or a matrix')
    dims: Optional[Sequence[int]] = data.get('dims')
    if dims is not None and (not isinstance(dims, list) or not all(isinstance(d, int) and not isinstance(d, bool) for d in dims)):
        raise ValidationError(f'{name}.dims must be a list of integers')
    if 'ket' in data:
        return PureState(parse_vector(data['ket'], f'{name}.ket'), dims, tol=tol).density()
    if 'matrix' in data:
        return DensityMatrix(parse_matrix(data['matrix'], f'{name}.matrix'), dims, tol=tol)
    if 'data' in data:
        return DensityMatrix(_counted_matrix(data, name), dims, tol=tol)
    raise ValidationError(f'{name} needs "rows", "cols" and "data", a "matrix" or a "ket" field')


def state_to_json(rho: DensityMatrix) -> Dict[str, Any]:
    """Counted matrix of a density matrix with its "dims"."""
    encoded: Dict[str, Any] = matrix_to_json(rho.matrix)
    encoded['dims'] = list(rho.dims)
    return encoded


def channel_from_json(data: Any, tol: Optional[float] = None) -> KrausChannel:
    """
    Builds a channel from its JSON object; a channel declared CPTP is checked to be so.
    """
    if not isinstance(data, dict) or 'kraus' not in data:
        raise ValidationError('Channel JSON must be an object with a "kraus" field')
    if not isinstance(data['kraus'], list) or len(data['kraus']) == 0:
        raise ValidationError('channel.kraus must be a non-empty list of matrices')
    operators: List[np.ndarray] = [parse_matrix(op, f'channel.kraus[{index}]') for index, op in enumerate(data['kraus'])]
    d_in: int = operators[0].shape[1]
    d_out: int = operators[0].shape[0]
    if data.get('d_in', d_in) != d_in or data.get('d_out', d_out) != d_out:
        raise DimensionError(f'channel.d_in/d_out {data.get("d_in")}/{data.get("d_out")} do not match Kraus operators of shape {operators[0].shape}')
    cptp: Any = data.get('cptp', True)
    if not isinstance(cptp, bool):
        raise ValidationError('channel.cptp must be true or false')
    return KrausChannel(operators, data.get('dims_in'), data.get('dims_out'), cptp=cptp, name=data.get('name', 'file'), tol=tol)


def channel_to_json(ch: KrausChannel) -> Dict[str, Any]:
    """JSON object of a channel."""
    return {'name': ch.name, 'd_in': ch.d_in, 'd_out': ch.d_out, 'dims_in': list(ch.dims_in), 'dims_out': list(ch.dims_out),
            'kraus': [matrix_to_json(op) for op in ch.kraus_ops], 'cptp': ch.cptp}


def povm_to_json(povm: PovmSet) -> Dict[str, Any]:
    """JSON object of a POVM."""
    return {'space_dims': list(povm.space_dims), 'elements': [matrix_to_json(element) for element in povm.elements]}


def game_from_json(data: Any, tol: Optional[float] = None) -> GameSpec:
    """
    Builds a game from its JSON object.
    """
    if not isinstance(data, dict):
        raise ValidationError('Game JSON must be an object')
    for key in ('p', 'q', 'zeta', 'eta', 'payoff'):
        if key not in data:
            raise ValidationError(f'Game JSON lacks the "{key}" field')
    for key in ('zeta', 'eta'):
        if not isinstance(data[key], list) or len(data[key]) == 0:
            raise ValidationError(f'game.{key} must be a non-empty list of states')
    try:
        table: np.ndarray = np.asarray(data['payoff'], dtype=float)
        p: np.ndarray = np.asarray(data['p'], dtype=float)
        q: np.ndarray = np.asarray(data['q'], dtype=float)
    except (TypeError, ValueError) as err:
        raise ValidationError(f'game.p, game.q and game.payoff must be numeric arrays: {err}') from err
    return GameSpec(p=p, q=q,
                    zeta=[state_from_json(state, tol, f'game.zeta[{index}]') for index, state in enumerate(data['zeta'])],
                    eta=[state_from_json(state, tol, f'game.eta[{index}]') for index, state in enumerate(data['eta'])],
                    payoff=table, name=data.get('name', 'game'))


def game_to_json(game: GameSpec) -> Dict[str, Any]:
    """JSON object of a game."""
    return {'name': game.name, 'p': game.p.tolist(), 'q': game.q.tolist(), 'zeta': [state_to_json(state) for state in game.zeta],
            'eta': [state_to_json(state) for state in game.eta], 'payoff': game.payoff.tolist()}


def rounded(value: Any) -> Any:
    """
    Recursively rounds floats to 12 significant digits; complex numbers become [re, im].
    """
    if value is None or isinstance(value, (bool, str)):
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(f'{float(value):.{SIGNIFICANT_DIGITS}g}')
    if isinstance(value, (complex, np.complexfloating)):
        return [rounded(value.real), rounded(value.imag)]
    if isinstance(value, np.ndarray):
        return rounded(value.tolist())
    if isinstance(value, dict):
        return {key: rounded(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [rounded(item) for item in value]
    return str(value)


def dumps(result: Dict[str, Any]) -> str:
    """Serializes a result object deterministically with 12 significant digits."""
    return json.dumps(rounded(result), sort_keys=False)


def write_sweep_csv(rows: Sequence[SweepRow], path: str) -> None:
    """
    Writes sweep rows with the columns param, g_abs, q_factor.
    """
    try:
        with open(path, 'w', encoding='utf-8', newline='') as csv_file:
            writer = csv.writer(csv_file)
            writer.writerow(['param', 'g_abs', 'q_factor'])
            for row in rows:
                writer.writerow([f'{row.param:.{SIGNIFICANT_DIGITS}g}', f'{row.g_abs:.{SIGNIFICANT_DIGITS}g}', f'{row.q_factor:.{SIGNIFICANT_DIGITS}g}'])
    except OSError as err:
        raise ValidationError(f'Cannot write {path}: {err.strerror}') from err
    LOG.info('Wrote %d sweep rows to %s', len(rows), path)
