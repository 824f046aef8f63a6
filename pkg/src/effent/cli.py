"""
Command line front end of effent.

Every subcommand prints one JSON object to standard output, sweeps additionally write a CSV file.
Validation errors exit with 2, numerical failures with 3; errors are reported on standard error only.
"""
from __future__ import annotations
from typing import TYPE_CHECKING

from dataclasses import replace
import argparse
import json
import logging
import math
import os
import sys

import numpy as np

from effent import __version__
from effent.errors import EffentError, ValidationError, NumericalError
from effent.qcore import DensityMatrix, set_default_tol, trace_distance
from effent.channels import KrausChannel, amplitude_damping, complete_dephasing, depolarizing, identity_channel, phase_damping, ssr_dephasing
from effent.entanglement import convex_roof
from effent.effective import Measure, effective_g_concurrence, entanglement_breaking_probe, quality_factor, wiseman_vaccaro
from effent.games import bell_statistics_game, maximize_payoff, restricted_payoff
from effent.bec import FAMILIES, BecParams, PhaseDistribution, g_factor, g_factor_quadrature, g_sweep, limit_map, simulate_bec_exact, \
    ssr_lifting_channel
from effent.config import LOG_LEVELS, Config
from effent.serialization import channel_from_json, dumps, game_from_json, load_json, povm_to_json, state_from_json, state_to_json, \
    write_sweep_csv
from effent.selftest import run_selftest

if TYPE_CHECKING:
    from typing import Any, Dict, List, Optional, Sequence

LOG: logging.Logger = logging.getLogger("effent.cli")

EXIT_OK: int = 0
EXIT_VALIDATION: int = 2
EXIT_NUMERICAL: int = 3


class ThrowingArgumentParser(argparse.ArgumentParser):
    """
    Argument parser that raises instead of printing usage and exiting on malformed arguments.
    """
    def error(self, message: str) -> None:
        raise ValidationError(f'{message} ({self.format_usage().strip()})')


def _number(text: str, name: str) -> float:
    try:
        value: float = float(text)
    except ValueError as err:
        raise ValidationError(f'{name}: {text!r} is not a number') from err
    if not math.isfinite(value):
        raise ValidationError(f'{name}: {text!r} is not finite')
    return value


def _dimension(text: str, name: str) -> int:
    value: float = _number(text, name)
    if not value.is_integer() or value < 1:
        raise ValidationError(f'{name}: {text!r} is not a positive integer')
    return int(value)


def _numbers(text: str, name: str, count: int) -> List[float]:
    parts: List[str] = [part for part in text.split(',') if part.strip() != '']
    if len(parts) != count:
        raise ValidationError(f'{name} needs {count} comma separated values, got {text!r}')
    return [_number(part, name) for part in parts]


def parse_distribution_spec(spec: str) -> PhaseDistribution:
    """
    Parses delta:phi0, uniform, wrapped-normal:mu,sigma, double-rect:w,delta, delta-mixture:phi@weight,... or
    tabulated:v0,v1,...
    """
    name, _, params = spec.strip().partition(':')
    if name == 'uniform':
        return PhaseDistribution.uniform()
    if name == 'delta':
        return PhaseDistribution.delta(_number(params, 'delta phase'))
    if name == 'wrapped-normal':
        mu, sigma = _numbers(params, 'wrapped-normal', 2)
        return PhaseDistribution.wrapped_normal(mu, sigma)
    if name == 'double-rect':
        w, delta = _numbers(params, 'double-rect', 2)
        return PhaseDistribution.double_rect(w, delta)
    if name == 'delta-mixture':
        points: List[tuple] = []
        for item in params.split(','):
            phi, separator, weight = item.partition('@')
            if separator == '':
                raise ValidationError(f'delta-mixture items are phi@weight, got {item!r}')
            points.append((_number(phi, 'delta-mixture phase'), _number(weight, 'delta-mixture weight')))
        return PhaseDistribution.delta_mixture(points)
    if name == 'tabulated':
        return PhaseDistribution.tabulated([_number(value, 'tabulated density') for value in params.split(',')])
    raise ValidationError(f'Unknown phase distribution {name!r} in {spec!r}')


def _blocks(text: str) -> List[List[int]]:
    try:
        return [[int(index) for index in block.split(',')] for block in text.split('|')]
    except ValueError as err:
        raise ValidationError(f'Number blocks are written like 0|1,2|3, got {text!r}') from err


def parse_channel_spec(spec: str, tol: Optional[float] = None) -> KrausChannel:
    """
    Parses a named channel or loads a channel JSON file.

    Named channels: identity[:d], amplitude-damping:gamma, phase-damping:lambda, depolarizing:p[,d], dephasing[:d],
    ssr[:blocks] with blocks like 0|1,2, and bec:<distribution>,<theta>.

    Args:
        spec (str): The channel specification.
        tol (Optional[float]): Tolerance of the CPTP check of file channels.

    Returns:
        KrausChannel: The validated channel.
    """
    spec = spec.strip()
    if os.path.isfile(spec) or spec.endswith('.json'):
        return channel_from_json(load_json(spec), tol)
    name, _, params = spec.partition(':')
    if name == 'identity':
        return identity_channel(_dimension(params, 'identity dimension') if params else 2)
    if name == 'amplitude-damping':
        return amplitude_damping(_number(params, 'amplitude-damping rate'))
    if name == 'phase-damping':
        return phase_damping(_number(params, 'phase-damping rate'))
    if name == 'depolarizing':
        values: List[str] = params.split(',')
        return depolarizing(_number(values[0], 'depolarizing probability'), _dimension(values[1], 'depolarizing dimension') if len(values) > 1 else 2)
    if name == 'dephasing':
        return complete_dephasing(_dimension(params, 'dephasing dimension') if params else 2)
    if name == 'ssr':
        return ssr_dephasing(_blocks(params) if params else [[0], [1]])
    if name == 'bec':
        dist_spec, separator, theta = params.rpartition(',')
        if separator == '':
            raise ValidationError(f'bec channel is written bec:<distribution>,<theta>, got {spec!r}')
        return ssr_lifting_channel(parse_distribution_spec(dist_spec), _number(theta, 'bec theta'))
    raise ValidationError(f'Unknown channel {name!r} in {spec!r}')


def parse_grid(text: str) -> List[float]:
    """
    Parses start:stop:step (stop included) or a comma separated list.
    """
    if ':' in text:
        parts: List[str] = text.split(':')
        if len(parts) != 3:
            raise ValidationError(f'Grid is written start:stop:step, got {text!r}')
        start, stop, step = (_number(part, 'grid') for part in parts)
        if step <= 0 or stop < start:
            raise ValidationError(f'Grid {text!r} needs a positive step and stop >= start')
        count: int = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + step * index for index in range(count)]
    return [_number(part, 'grid') for part in text.split(',') if part.strip() != '']


def _load_state(path: str, tol: Optional[float]) -> DensityMatrix:
    return state_from_json(load_json(path), tol)


def cmd_quality(args: argparse.Namespace, config: Config) -> Dict[str, Any]:
    """Quality factor of a channel."""
    channel: KrausChannel = parse_channel_spec(args.channel, config.tol)
    if args.probe:
        probe = entanglement_breaking_probe(channel, args.d, config.roof_options(), config.tol)
        return {'q': probe.q, 'ppt_separable_hint': probe.ppt_separable_hint}
    return {'q': quality_factor(channel, args.d, config.roof_options())}


def cmd_gconc(args: argparse.Namespace, config: Config) -> Dict[str, Any]:
    """G-concurrence of a state."""
    rho: DensityMatrix = _load_state(args.state, config.tol)
    result = convex_roof(rho, args.d, config.roof_options())
    return {'value': result.value, 'method': result.method, 'iters': result.iters}


def cmd_effective(args: argparse.Namespace, config: Config) -> Dict[str, Any]:
    """Effective G-concurrence, or the strict superselection measure when number blocks are given."""
    rho: DensityMatrix = _load_state(args.state, config.tol)
    if args.number_blocks_a is not None or args.number_blocks_b is not None:
        if args.number_blocks_a is None or args.number_blocks_b is None:
            raise ValidationError('--number-blocks-a and --number-blocks-b must be given together')
        if len(rho.dims) != 2:
            raise ValidationError('The state needs "dims" with two parties for number blocks')
        measured = wiseman_vaccaro(rho, (_blocks(args.number_blocks_a), _blocks(args.number_blocks_b)), Measure(args.measure),
                                   config.roof_options(), config.tol)
        return {'value': measured.value, 'kind': str(measured.kind), 'measure': str(measured.measure),
                'blocks': [{'n_a': term.n_a, 'n_b': term.n_b, 'p': term.p, 'e': term.e} for term in measured.blocks]}
    channel_a: KrausChannel = parse_channel_spec(args.channel_a, config.tol)
    channel_b: KrausChannel = parse_channel_spec(args.channel_b, config.tol)
    if len(rho.dims) != 2:
        rho = rho.with_dims((channel_a.d_in, channel_b.d_in)) if rho.dim == channel_a.d_in * channel_b.d_in else rho
    result = effective_g_concurrence(rho, channel_a, channel_b, opts=config.roof_options(), tol=config.tol)
    return {'value': result.value, 'kind': str(result.kind), 'q_a': result.q_a, 'q_b': result.q_b}


def cmd_game(args: argparse.Namespace, config: Config) -> Dict[str, Any]:
    """Seesaw payoff of a game, optionally with restricted measurements."""
    game = bell_statistics_game() if args.game == 'bell-statistics' else game_from_json(load_json(args.game), config.tol)
    rho: DensityMatrix = _load_state(args.state, config.tol)
    opts = config.seesaw_options()
    if args.restarts is not None:
        opts = replace(opts, restarts=args.restarts)
    if args.channel_a is None and args.channel_b is None and not args.verify:
        result = maximize_payoff(game, rho, opts)
    else:
        d_a, d_b = rho.dims if len(rho.dims) == 2 else (None, None)
        channel_a: KrausChannel = parse_channel_spec(args.channel_a, config.tol) if args.channel_a else identity_channel(d_a or 2)
        channel_b: KrausChannel = parse_channel_spec(args.channel_b, config.tol) if args.channel_b else identity_channel(d_b or 2)
        result = restricted_payoff(game, rho, channel_a, channel_b, opts, verify=args.verify)
    output: Dict[str, Any] = {'value': result.value, 'rounds': result.rounds, 'restarts_used': result.restarts_used}
    if args.strategy:
        output['alice'] = povm_to_json(result.alice)
        output['bob'] = povm_to_json(result.bob)
    return output


def cmd_bec(args: argparse.Namespace, config: Config) -> Dict[str, Any]:
    """g-factor and lifting channel of a condensate reference, optionally with the exact Fock evolution."""
    dist: PhaseDistribution = parse_distribution_spec(args.dist)
    g: complex = g_factor(dist)
    channel: KrausChannel = ssr_lifting_channel(dist, args.theta, canonicalize=args.canonicalize)
    output: Dict[str, Any] = {'g': g, 'g_abs': abs(g), 'g_quadrature': g_factor_quadrature(dist, config.quadrature_points),
                              'q': quality_factor(channel, 2)}
    if args.exact:
        if args.alpha_sq is None:
            raise ValidationError('--exact needs --alpha-sq')
        cutoff: int = args.trunc if args.trunc is not None else int(math.ceil(args.alpha_sq + 6 * math.sqrt(args.alpha_sq)))
        start: DensityMatrix = _load_state(args.input, config.tol) if args.input else DensityMatrix(np.diag([1.0, 0.0]))
        simulated = simulate_bec_exact(BecParams(args.alpha_sq, args.theta), args.phi, cutoff, start, args.mode_a_levels)
        target: np.ndarray = limit_map(args.phi, args.theta)
        limit: DensityMatrix = DensityMatrix(target @ start.matrix @ target.conj().T, validate=False)
        output['exact'] = {'trace_distance': trace_distance(simulated.state, limit), 'leakage': simulated.leakage,
                           'norm_loss': simulated.norm_loss, 'unitarity_defect': simulated.unitarity_defect,
                           'state': state_to_json(simulated.state)}
    return output


def cmd_sweep(args: argparse.Namespace, config: Config) -> Dict[str, Any]:
    """g-factor sweep along a distribution family, written as CSV."""
    if args.grid is None:
        raise ValidationError('sweep needs a parameter grid (--grid, --sigma, --delta, --phi0 or --weight)')
    fixed: Dict[str, float] = {}
    if args.family == 'wrapped-normal':
        fixed['mu'] = args.mu
    if args.family == 'double-rect':
        fixed['w'] = args.w
    rows = g_sweep(args.family, parse_grid(args.grid), args.theta, workers=args.workers, **fixed)
    write_sweep_csv(rows, args.out)
    return {'rows': len(rows), 'out': args.out}


def cmd_selftest(args: argparse.Namespace, config: Config) -> Dict[str, Any]:
    """Acceptance checks."""
    results = run_selftest(full=args.full, seed=config.seed, roof=config.roof_options())
    failed: List[str] = [result.name for result in results if not result.passed]
    output: Dict[str, Any] = {'passed': len(failed) == 0, 'checks': [{'name': result.name, 'passed': result.passed, 'detail': result.detail,
                                                                       'seconds': result.seconds} for result in results]}
    if failed:
        raise SelftestFailed(output)
    return output


class SelftestFailed(NumericalError):
    """Raised when an acceptance check fails; carries the full summary."""
    def __init__(self, summary: Dict[str, Any]) -> None:
        super().__init__('Failed checks: ' + ', '.join(check['name'] for check in summary['checks'] if not check['passed']))
        self.summary: Dict[str, Any] = summary


def build_parser() -> ThrowingArgumentParser:
    """Builds the argument parser with all subcommands."""
    parser = ThrowingArgumentParser(prog='effent', description='Effective entanglement under restricted measurements')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('--config', dest='config', help='JSON configuration file with an "effent" section', default=None)
    parser.add_argument('--seed', dest='seed', type=int, help='Seed of all stochastic components (default: config, EFFENT_SEED, 0)', default=None)
    parser.add_argument('--tol', dest='tol', type=float, help='Tolerance of all validity checks (default 1e-9)', default=None)
    parser.add_argument('--log-level', dest='log_level', choices=list(LOG_LEVELS), help='Logging level on standard error', default=None)
    run_options = ThrowingArgumentParser(add_help=False)
    run_options.add_argument('--seed', dest='seed', type=int, help='Seed of all stochastic components', default=argparse.SUPPRESS)
    run_options.add_argument('--tol', dest='tol', type=float, help='Tolerance of all validity checks', default=argparse.SUPPRESS)
    subparsers = parser.add_subparsers(dest='command', required=True, parser_class=ThrowingArgumentParser)

    quality = subparsers.add_parser('quality', parents=[run_options], help='Quality factor of a channel')
    quality.add_argument('--channel', required=True, help='Channel name:params or JSON file')
    quality.add_argument('--d', type=int, default=None, help='Channel dimension')
    quality.add_argument('--probe', action='store_true', help='Also report the PPT separability hint of the Choi state')
    quality.set_defaults(handler=cmd_quality)

    gconc = subparsers.add_parser('gconc', parents=[run_options], help='G-concurrence of a state')
    gconc.add_argument('--state', required=True, help='State JSON file')
    gconc.add_argument('--d', type=int, default=None, help='Local dimension if the state has no dims')
    gconc.add_argument('--restarts', type=int, default=None, help='Convex roof restarts')
    gconc.set_defaults(handler=cmd_gconc)

    effective = subparsers.add_parser('effective', parents=[run_options], help='Effective G-concurrence or strict superselection measure')
    effective.add_argument('--state', required=True, help='State JSON file')
    effective.add_argument('--channel-a', dest='channel_a', default='identity', help='Channel restricting party A')
    effective.add_argument('--channel-b', dest='channel_b', default='identity', help='Channel restricting party B')
    effective.add_argument('--number-blocks-a', dest='number_blocks_a', default=None, help='Particle number blocks of party A, e.g. 0|1,2|3')
    effective.add_argument('--number-blocks-b', dest='number_blocks_b', default=None, help='Particle number blocks of party B')
    effective.add_argument('--measure', choices=[str(measure) for measure in Measure], default='auto', help='Measure applied to number blocks')
    effective.set_defaults(handler=cmd_effective)

    game = subparsers.add_parser('game', parents=[run_options], help='Seesaw payoff of a semiquantum nonlocal game')
    game.add_argument('--game', required=True, help='Game JSON file or bell-statistics')
    game.add_argument('--state', required=True, help='State JSON file')
    game.add_argument('--channel-a', dest='channel_a', default=None, help='Restriction of party A')
    game.add_argument('--channel-b', dest='channel_b', default=None, help='Restriction of party B')
    game.add_argument('--restarts', type=int, default=None, help='Seesaw restarts')
    game.add_argument('--verify', action='store_true', help='Check the restricted payoff through the adjoint channels')
    game.add_argument('--strategy', action='store_true', help='Include the found POVMs in the output')
    game.set_defaults(handler=cmd_game)

    bec = subparsers.add_parser('bec', parents=[run_options], help='Condensate reference frame')
    bec.add_argument('--dist', required=True, help='Phase distribution, e.g. wrapped-normal:0,1.0')
    bec.add_argument('--theta', type=float, required=True, help='Rotation angle')
    bec.add_argument('--canonicalize', action='store_true', help='Strip the residual z rotation from the channel')
    bec.add_argument('--exact', action='store_true', help='Run the truncated Fock space evolution')
    bec.add_argument('--alpha-sq', dest='alpha_sq', type=float, default=None, help='Condensate occupation')
    bec.add_argument('--trunc', type=int, default=None, help='Fock cutoff of the condensate')
    bec.add_argument('--phi', type=float, default=0.0, help='Condensate phase of the exact evolution')
    bec.add_argument('--mode-a-levels', dest='mode_a_levels', type=int, default=2, help='Fock levels of the system mode')
    bec.add_argument('--input', default=None, help='Qubit input state JSON file (default |0>)')
    bec.set_defaults(handler=cmd_bec)

    sweep = subparsers.add_parser('sweep', parents=[run_options], help='g-factor sweep written as CSV')
    sweep.add_argument('--family', required=True, choices=list(FAMILIES), help='Distribution family')
    sweep.add_argument('--grid', '--sigma', '--delta', '--phi0', '--weight', dest='grid', default=None, help='start:stop:step or a list')
    sweep.add_argument('--theta', type=float, default=math.pi / 4, help='Rotation angle of the lifting channel')
    sweep.add_argument('--mu', type=float, default=0.0, help='Mean of the wrapped normal family')
    sweep.add_argument('--w', type=float, default=0.4, help='Block width of the double rectangle family')
    sweep.add_argument('--workers', type=int, default=1, help='Threads evaluating grid points')
    sweep.add_argument('--out', required=True, help='CSV output file')
    sweep.set_defaults(handler=cmd_sweep)

    selftest = subparsers.add_parser('selftest', parents=[run_options], help='Run the acceptance checks')
    selftest.add_argument('--full', action='store_true', help='Use the full sample counts')
    selftest.set_defaults(handler=cmd_selftest)
    return parser


def _report(kind: str, message: str) -> None:
    print(json.dumps({'error': kind, 'message': message}), file=sys.stderr)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parses the arguments, runs one subcommand and prints its result.

    Returns:
        int: 0 on success, 2 on invalid input, 3 on numerical failure.
    """
    try:
        args = build_parser().parse_args(argv)
        overrides: Dict[str, Any] = {'seed': args.seed, 'tol': args.tol, 'log_level': args.log_level}
        if getattr(args, 'restarts', None) is not None and args.command == 'gconc':
            overrides['roof.restarts'] = args.restarts
        config: Config = Config.from_file(args.config, overrides)
        logging.basicConfig(stream=sys.stderr, format='%(asctime)s:%(levelname)s:%(name)s:%(message)s')
        logging.getLogger('effent').setLevel(config.log_level)
        if config.tol is not None:
            set_default_tol(config.tol)
        LOG.info('Running %s', args.command)
        output: str = dumps(args.handler(args, config))
    except SelftestFailed as err:
        LOG.error('%s', err)
        print(dumps(err.summary), file=sys.stderr)
        return EXIT_NUMERICAL
    except ValidationError as err:
        LOG.error('%s', err)
        _report('validation', str(err))
        return EXIT_VALIDATION
    except NumericalError as err:
        LOG.error('%s', err)
        _report('numerical', str(err))
        return EXIT_NUMERICAL
    except EffentError as err:
        LOG.error('%s', err)
        _report('error', str(err))
        return EXIT_NUMERICAL
    except np.linalg.LinAlgError as err:
        LOG.error('Linear algebra failure: %s', err)
        _report('numerical', str(err))
        return EXIT_NUMERICAL
    except SystemExit as err:
        return int(err.code or 0)
    print(output)
    return EXIT_OK


def main() -> None:
    """Console script entry point."""
    sys.exit(run())


if __name__ == '__main__':
    main()
