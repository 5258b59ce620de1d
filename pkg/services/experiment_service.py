"""
Config-driven experiment execution: load, run, emit artifacts, record in the ledger.
"""
import hashlib
import json
import logging
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Any, List, Optional, Tuple

import numpy as np

import config.settings as settings
from database.connection import init_database, get_db_session, ledger_url
from models.contraction import Box, EquilibriumRecord
from models.ensemble import ParticleEnsemble
from models.experiment_config import ExperimentConfig, FieldSelection, MeasureSpec
from models.fields import DriftField, DiffusionField
from models.fpe import FpeProblem, SurfaceQuadrature
from models.measures import GridDensity
from models.report import RunArtifacts, SeriesTable, EXIT_CODES, SUCCESS, ERROR
from repositories.verification_run_repository import VerificationRunRepository
from services.artifact_service import ArtifactService
from services.contraction_service import ContractionService
from services.exceptions import ValidationError, DomainError
from services.field_service import FieldService
from services.fpe_service import FokkerPlanckService
from services.hopfield_service import HopfieldService
from services.measure_service import MeasureService
from services.sde_service import SDEService
from services.verification_service import VerificationService

logger = logging.getLogger(__name__)

LEMMA_CASES = ('zero', 'constant', 'diag_quadratic')
CONSTANT_A = np.array([[2.0, 0.5], [0.5, 1.0]])
REFINEMENT_TOL = 1e-6


@dataclass
class RunOutcome:
    exit_code: int
    verdict: str
    label: str
    output_dir: str
    paths: List[Path] = field(default_factory=list)
    artifacts: Optional[RunArtifacts] = None


class ExperimentService:
    """Service running one experiment configuration end to end."""

    _ledger_lock = threading.Lock()

    def __init__(self, field_service: FieldService, sde_service: SDEService,
                 contraction_service: ContractionService, measure_service: MeasureService,
                 fpe_service: FokkerPlanckService, hopfield_service: HopfieldService,
                 verification_service: VerificationService, artifact_service: ArtifactService,
                 run_repository: VerificationRunRepository):
        self.field_service = field_service
        self.sde_service = sde_service
        self.contraction_service = contraction_service
        self.measure_service = measure_service
        self.fpe_service = fpe_service
        self.hopfield_service = hopfield_service
        self.verification_service = verification_service
        self.artifact_service = artifact_service
        self.run_repository = run_repository

    def load_config(self, config_path: str) -> Tuple[ExperimentConfig, str]:
        """
        Parse and validate a JSON config.

        Returns:
            (config, sha256 of the canonical JSON)

        Raises:
            ValidationError: Syntax errors carry 'line L column C' as key
        """
        try:
            text = Path(config_path).read_text()
        except OSError as e:
            raise ValidationError(f"Cannot read config {config_path}: {e}", key='config_path') from e
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ValidationError(f"{config_path}:{e.lineno}:{e.colno}: {e.msg}",
                                  key=f"line {e.lineno} column {e.colno}") from e
        return self.config_from_dict(data)

    def config_from_dict(self, data: Dict[str, Any]) -> Tuple[ExperimentConfig, str]:
        config = ExperimentConfig.from_dict(data)
        if settings.OUTPUT_DIR:
            config.output_dir = settings.OUTPUT_DIR
        for key in ('drift', 'diffusion', 'alt_diffusion'):
            selection: Optional[FieldSelection] = getattr(config, key)
            if selection is not None and self.field_service.canonical_name(selection.name) not in self.field_service.catalog_names():
                raise ValidationError(f"Unknown catalog field '{selection.name}' in '{key}'", key=f"{key}.name")
        return config, self.checksum(config)

    @staticmethod
    def checksum(config: ExperimentConfig) -> str:
        canonical = json.dumps(config.to_dict(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def run(self, config: ExperimentConfig, checksum: Optional[str] = None) -> RunOutcome:
        """Execute, write artifacts and record the run; errors are recorded, logged and re-raised."""
        checksum = checksum or self.checksum(config)
        started_at = datetime.now(timezone.utc)
        started = time.perf_counter()
        logger.info(f"Run '{config.label}' started ({config.experiment})")
        try:
            artifacts = self.execute(config)
            artifacts.config_checksum = checksum
            paths = self.artifact_service.emit_plotdata(config.output_dir, artifacts)
        except Exception as e:
            logger.error(f"Run '{config.label}' failed: {e}")
            self._record(config, checksum, ERROR, None, started_at, time.perf_counter() - started, error=str(e))
            raise
        verdict = artifacts.report.verdict if artifacts.report is not None else SUCCESS
        self._record(config, checksum, verdict, artifacts, started_at, time.perf_counter() - started)
        logger.info(f"Run '{config.label}' finished: {verdict}")
        return RunOutcome(exit_code=EXIT_CODES[verdict], verdict=verdict, label=config.label,
                          output_dir=config.output_dir, paths=paths, artifacts=artifacts)

    def execute(self, config: ExperimentConfig) -> RunArtifacts:
        handler = getattr(self, f"_run_{config.experiment.replace('-', '_')}")
        artifacts: RunArtifacts = handler(config)
        artifacts.parameters = config.to_dict()
        artifacts.seeds.setdefault('master', config.numerics.seed)
        return artifacts

    def history(self, output_dir: str, limit: int = 20, claim_id: Optional[str] = None) -> List[Dict[str, Any]]:
        with self._ledger_lock:
            init_database(ledger_url(output_dir, settings.RUN_LEDGER_FILENAME))
            with get_db_session() as session:
                return [run.to_dict() for run in self.run_repository.get_recent(session, limit, claim_id)]

    # Experiments

    def _run_simulate(self, config: ExperimentConfig) -> RunArtifacts:
        f, G = self._fields(config)
        n = config.numerics
        x0 = config.initial.center
        tables: Dict[str, SeriesTable] = {}
        summary: Dict[str, Any] = {}
        if config.initial_alt is not None:
            pair = self.sde_service.simulate_coupled_pair(f, G, x0, config.initial_alt.center, n.T, n.dt, n.seed)
            tables['series_trajectory_x'] = self._trajectory_table(pair.trajectory_x)
            tables['series_trajectory_z'] = self._trajectory_table(pair.trajectory_z)
            separation = pair.separation()
            summary['initial_separation'] = float(separation[0])
            summary['terminal_separation'] = float(separation[-1])
        else:
            trajectory = self.sde_service.simulate_trajectory(f, G, x0, n.T, n.dt, n.seed)
            tables['series_trajectory_x'] = self._trajectory_table(trajectory)

        ensemble = self._sample(config.initial, n.N, n.seed, 1)
        ensemble = self.sde_service.evolve_ensemble(ensemble, f, G, n.dt, self.sde_service.steps_for(n.T, n.dt))
        tables['ensemble_terminal'] = self._ensemble_table(ensemble)
        summary.update({'ensemble_mean': ensemble.mean().tolist(), 'ensemble_covariance': ensemble.covariance().tolist(),
                        'time': ensemble.time, 'drift': f.name, 'diffusion': G.name, 'dt': n.dt})
        return RunArtifacts(config.experiment, config.label, summary=summary, tables=tables)

    def _run_stationary(self, config: ExperimentConfig) -> RunArtifacts:
        """Particle ensemble at T and FPE stationary solve, with mode agreement."""
        f, G = self._fields(config)
        n = config.numerics
        grid = config.grid.to_spec()
        ensemble = self._sample(config.initial, n.N, n.seed, 1)
        ensemble = self.sde_service.evolve_ensemble(ensemble, f, G, n.dt, self.sde_service.steps_for(n.T, n.dt))
        kde = self.measure_service.kde_grid(ensemble, n.kernel_variance * np.eye(2), grid)
        summary = {'particle_mean': ensemble.mean().tolist(), 'particle_covariance': ensemble.covariance().tolist()}
        series, grids = {}, {'kde': kde}

        stationary, progress = self._solve_fpe(config, f, G)
        grids['stationary'] = stationary
        series['fpe_progress'] = progress
        fpe_modes = self._modes(stationary)
        kde_modes = self._modes(kde)
        summary.update({
            'fpe_mean': stationary.mean().tolist(),
            'fpe_covariance': stationary.covariance().tolist(),
            'fpe_modes': fpe_modes.tolist(),
            'kde_modes': kde_modes.tolist(),
            'modes_agree_within_2_cells': self._modes_agree(fpe_modes, kde_modes, grid),
            'fpe_mass': stationary.total_mass()
        })
        return RunArtifacts(config.experiment, config.label, summary=summary, series=series, grids=grids)

    def _run_wasserstein(self, config: ExperimentConfig) -> RunArtifacts:
        """W2 between ensembles from initial and initial_alt over time, optional second diffusion."""
        f, G = self._fields(config)
        n = config.numerics
        Q = self._diffusion(config.alt_diffusion) if config.alt_diffusion is not None else G
        a = self._sample(config.initial, n.N, n.seed, 1)
        b = self._sample(config.initial_alt or config.initial, n.N, n.seed, 2)
        table = SeriesTable(['t', 'w2', 'method'])
        table.append(0.0, self._w2(a, b, config), n.w2_method)
        n_steps = self.sde_service.steps_for(n.T, n.dt)
        stride = max(1, int(round(n.record_every / n.dt)))
        while a.steps_taken < n_steps:
            chunk = min(stride, n_steps - a.steps_taken)
            a = self.sde_service.evolve_ensemble(a, f, G, n.dt, chunk)
            b = self.sde_service.evolve_ensemble(b, f, Q, n.dt, chunk)
            table.append(a.time, self._w2(a, b, config), n.w2_method)
        summary = {'method': n.w2_method, 'w2_initial': table.rows[0][1], 'w2_terminal': table.rows[-1][1]}
        return RunArtifacts(config.experiment, config.label, summary=summary, series={'w2': table},
                            seeds={'initial_stream': 1, 'initial_alt_stream': 2})

    def _run_verify(self, config: ExperimentConfig) -> RunArtifacts:
        f, G = self._fields(config)
        n = config.numerics
        geo = config.geometry
        grid = config.grid.to_spec()
        v = self.verification_service
        if config.claim == 'thm1_decay':
            report = v.verify_thm1(f, G, config.initial, config.initial_alt or config.initial,
                                   n.T, n.dt, n.n_pairs, n.seed, numerics=n)
        elif config.claim == 'prop1_chi_bound':
            if config.alt_diffusion is None:
                raise ValidationError("prop1_chi_bound needs 'alt_diffusion'", key='alt_diffusion')
            Q = self._diffusion(config.alt_diffusion)
            report = v.verify_prop1(f, G, Q, n.T, n.dt, n.N, n.seed, initial=config.initial,
                                    initial_alt=config.initial_alt, grid=grid, numerics=n)
        elif config.claim == 'prop2_mass_sink':
            equilibrium = self._equilibrium(f, geo.x_star, n.sample_box, n.seed)
            report = v.verify_prop2(f, equilibrium, self._omega(G), None, n.T, n.dt, grid, n.N, n.seed,
                                    r_star=geo.r_star, r_max=geo.r_max, start_radius=geo.start_radius,
                                    n_nodes=geo.n_nodes, numerics=n)
        else:
            system, x_a, x_b = self._thm2_system(f, geo)
            if geo.r is None:
                raise ValidationError("thm2_concentration needs geometry.r", key='geometry.r')
            report = v.verify_thm2(system, x_a, x_b, geo.r, self._omega(G), grid, initial=config.initial,
                                   N=n.N, T=n.T, dt=n.dt, seed=n.seed, numerics=n)
        return RunArtifacts(config.experiment, config.label, report=report)

    def _run_hopfield_demo(self, config: ExperimentConfig) -> RunArtifacts:
        """
        Particle pipeline for a Hopfield drift: two ensembles, W2 between them over
        time, KDE snapshots until the monitor threshold, energy landscape export.
        """
        f, G = self._fields(config)
        if not f.name.startswith('hopfield'):
            raise ValidationError(f"hopfield-demo needs a Hopfield drift, got '{f.name}'", key='drift.name')
        n = config.numerics
        grid = config.grid.to_spec()
        model = self.hopfield_service.build_model(f.params['u'], f.params['beta'], f.params['connectivity_scale'])
        landscape = self.hopfield_service.landscape(model)
        kernel = n.kernel_variance * np.eye(2)

        a = self._sample(config.initial, n.N, n.seed, 1)
        b = self._sample(config.initial_alt or config.initial, n.N, n.seed, 2)
        w2 = SeriesTable(['t', 'w2', 'method'])
        w2.append(0.0, self._w2(a, b, config), n.w2_method)
        history = [self.measure_service.kde_grid(a, kernel, grid)]
        n_steps = self.sde_service.steps_for(n.T, n.dt)
        stride = max(1, int(round(n.record_every / n.dt)))
        converged_at = None
        while a.steps_taken < n_steps:
            chunk = min(stride, n_steps - a.steps_taken)
            a = self.sde_service.evolve_ensemble(a, f, G, n.dt, chunk)
            b = self.sde_service.evolve_ensemble(b, f, G, n.dt, chunk)
            w2.append(a.time, self._w2(a, b, config), n.w2_method)
            history.append(self.measure_service.kde_grid(a, kernel, grid))
            monitor = self.measure_service.convergence_monitor(history[-2:], n.tol)
            if monitor.converged:
                converged_at = monitor.converged_at
                break
        monitor = self.measure_service.convergence_monitor(history, n.tol)
        monitor_table = SeriesTable(['t', 'norm'])
        for t, value in zip(monitor.times, monitor.norm_series):
            monitor_table.append(float(t), float(value))

        equilibria = self.hopfield_service.pattern_equilibria(model)
        sample = Box.symmetric(n.sample_box, 2).sample(np.random.default_rng(n.seed), 1000)
        consistency = self.hopfield_service.drift_p_consistency(landscape, sample)
        metric = self.hopfield_service.certify_metric(landscape, Box.symmetric(n.sample_box, 2), 1000, n.seed)
        energy = self.hopfield_service.energy_grid(landscape, grid)
        summary = {
            'regime': model.regime,
            'W_u': model.W.tolist(),
            'equilibria': [e.tolist() for e in equilibria],
            'equilibrium_energies': [self.hopfield_service.energy(landscape, e) for e in equilibria],
            'drift_p_residual': consistency['residual'],
            'metric_positive': metric['positive'],
            'metric_diagonal': metric['diagonal'],
            'metric_sign_ok': metric['sign_ok'],
            'monitor_converged_at': converged_at,
            'w2_terminal': w2.rows[-1][1],
            'kde_modes': self._modes(history[-1]).tolist()
        }
        return RunArtifacts(config.experiment, config.label, summary=summary,
                            series={'w2': w2, 'monitor': monitor_table},
                            grids={'kde': history[-1], 'energy': GridDensity(grid, energy)},
                            seeds={'initial_stream': 1, 'initial_alt_stream': 2})

    def _run_fpe_solve(self, config: ExperimentConfig) -> RunArtifacts:
        f, G = self._fields(config)
        stationary, progress = self._solve_fpe(config, f, G)
        summary = {
            'mass': stationary.total_mass(),
            'mean': stationary.mean().tolist(),
            'covariance': stationary.covariance().tolist(),
            'modes': self._modes(stationary).tolist(),
            'steps': progress.rows[-1][0] if len(progress) else 0,
            'scheme': config.numerics.scheme
        }
        return RunArtifacts(config.experiment, config.label, summary=summary,
                            series={'fpe_progress': progress}, grids={'stationary': stationary})

    def _run_lemma_report(self, config: ExperimentConfig) -> RunArtifacts:
        """Both sides of the boundary trace identity for three (A, v) cases at two quadrature resolutions."""
        geo = config.geometry
        center = np.asarray(geo.x_star if geo.x_star is not None else [0.0, 0.0], dtype=float)
        radius = geo.r or 1.0
        table = SeriesTable(['case', 'n_nodes', 'lhs', 'rhs', 'gap'])
        summary: Dict[str, Any] = {}
        for case in LEMMA_CASES:
            A, v, div_A, jac_v, c = self._lemma_case(case, center, radius)
            r = radius if case != 'diag_quadratic' else 1.0
            q = SurfaceQuadrature(center=c, radius=r, n_nodes=geo.n_nodes)
            coarse = self.fpe_service.lemma_tr_two_sided(A, v, q, div_A=div_A, jac_v=jac_v)
            fine = self.fpe_service.lemma_tr_two_sided(A, v, q.refined(), div_A=div_A, jac_v=jac_v)
            for nodes, result in ((q.n_nodes, coarse), (2 * q.n_nodes, fine)):
                table.append(case, nodes, result['lhs'], result['rhs'], result['gap'])
            change = max(abs(fine['lhs'] - coarse['lhs']), abs(fine['rhs'] - coarse['rhs']))
            summary[f'{case}_lhs'] = fine['lhs']
            summary[f'{case}_rhs'] = fine['rhs']
            summary[f'{case}_gap'] = fine['gap']
            summary[f'{case}_refinement_change'] = change
            summary[f'{case}_refinement_stable'] = bool(change <= REFINEMENT_TOL)
        return RunArtifacts(config.experiment, config.label, summary=summary, series={'lemma': table},
                            notes=['the identity is reported on both sides, not asserted'])

    # Helpers

    def _fields(self, config: ExperimentConfig) -> Tuple[DriftField, DiffusionField]:
        return self.field_service.catalog_pair(config.drift.name, config.drift.params,
                                               config.diffusion.name, config.diffusion.params)

    def _diffusion(self, selection: FieldSelection) -> DiffusionField:
        G = self.field_service.catalog_field(selection.name, selection.params)
        if not isinstance(G, DiffusionField):
            raise ValidationError(f"'{selection.name}' is not a diffusion", key='alt_diffusion.name')
        return G

    @staticmethod
    def _omega(G: DiffusionField) -> float:
        if G.isotropic_amplitude is None:
            raise ValidationError(f"'{G.name}' is not a constant isotropic diffusion", key='diffusion.name')
        return G.isotropic_amplitude

    def _sample(self, spec: MeasureSpec, n: int, seed: int, stream: int) -> ParticleEnsemble:
        return self.sde_service.sample_initial(spec.kind, spec.center, spec.scale, n, seed, stream=stream)

    def _w2(self, a: ParticleEnsemble, b: ParticleEnsemble, config: ExperimentConfig) -> float:
        return self.measure_service.wasserstein2(a, b, config.numerics.w2_method, seed=config.numerics.seed).value

    def _solve_fpe(self, config: ExperimentConfig, f: DriftField, G: DiffusionField):
        n = config.numerics
        grid = config.grid.to_spec()
        problem = FpeProblem(f, G, grid, dt=n.fpe_dt, scheme=n.scheme)
        self._require_coverage(problem, n.seed)
        progress = SeriesTable(['step', 'residual'])
        start = self.fpe_service.initial_density(grid, config.initial.kind, config.initial.center, config.initial.scale)
        stationary = self.fpe_service.solve_stationary(problem, start, tol=n.tol, max_steps=n.max_steps,
                                                       progress=progress)
        return stationary, progress

    def _require_coverage(self, problem: FpeProblem, seed: int) -> None:
        """Stable equilibria inside the grid must sit there with their stationary spread."""
        if not problem.drift.autonomous:
            return
        g = problem.grid
        region = Box((g.x_min, g.y_min), (g.x_max, g.y_max))
        stable = [e.x_star for e in self.contraction_service.find_equilibria(problem.drift, region, seed=seed) if e.is_stable]
        if stable and not self.fpe_service.check_coverage(problem, stable):
            raise DomainError(f"Grid {g.to_dict()} does not cover the stable equilibria {[x.tolist() for x in stable]} "
                              f"with their stationary spread")

    def _equilibrium(self, f: DriftField, x_star: Optional[List[float]], sample_box: float,
                     seed: int) -> EquilibriumRecord:
        if x_star is not None:
            x = np.asarray(x_star, dtype=float)
            abscissa = float(np.max(np.linalg.eigvals(self.contraction_service.numerical_jacobian(f, x)).real))
            return EquilibriumRecord(x_star=x, stability='stable' if abscissa < 0 else 'unstable',
                                     jacobian_spectrum_abscissa=abscissa,
                                     residual=float(np.linalg.norm(f.eval(0.0, x))))
        stable = [e for e in self.contraction_service.find_equilibria(f, Box.symmetric(sample_box, f.dimension),
                                                                      seed=seed) if e.is_stable]
        if not stable:
            raise ValidationError(f"No stable equilibrium of '{f.name}' found; set geometry.x_star", key='geometry.x_star')
        return stable[0]

    def _thm2_system(self, f: DriftField, geo):
        """Hopfield model (balls default to the deepest and shallowest pattern minima) or gradient drift."""
        if f.name.startswith('hopfield'):
            model = self.hopfield_service.build_model(f.params['u'], f.params['beta'], f.params['connectivity_scale'])
            x_a, x_b = geo.x_a, geo.x_b
            if x_a is None or x_b is None:
                landscape = self.hopfield_service.landscape(model)
                minima = sorted(self.hopfield_service.pattern_equilibria(model),
                                key=lambda e: self.hopfield_service.energy(landscape, e))
                if len(minima) < 2:
                    raise ValidationError("Hopfield model has fewer than two pattern minima", key='geometry.x_a')
                x_a = x_a if x_a is not None else minima[0]
                x_b = x_b if x_b is not None else minima[-1]
            return model, x_a, x_b
        if geo.x_a is None or geo.x_b is None:
            raise ValidationError("thm2_concentration needs geometry.x_a and geometry.x_b", key='geometry.x_a')
        return f, geo.x_a, geo.x_b

    @staticmethod
    def _lemma_case(case: str, center: np.ndarray, radius: float):
        """(A, v, div A, J v, circle centre) with analytic derivatives."""
        eye = np.eye(2)
        xi = lambda x: (x - center) / radius
        jac_xi = lambda x: np.broadcast_to(eye / radius, x.shape[:-1] + (2, 2))
        if case == 'zero':
            return (lambda x: np.zeros(x.shape[:-1] + (2, 2)), xi,
                    lambda x: np.zeros_like(x), jac_xi, center)
        if case == 'constant':
            return (lambda x: np.broadcast_to(CONSTANT_A, x.shape[:-1] + (2, 2)), xi,
                    lambda x: np.zeros_like(x), jac_xi, center)

        def A(x):
            out = np.zeros(x.shape[:-1] + (2, 2))
            out[..., 0, 0] = x[..., 0] ** 2
            out[..., 1, 1] = x[..., 1] ** 2
            return out

        rotation = np.array([[0.0, -1.0], [1.0, 0.0]])
        return (A, lambda x: x @ rotation.T, lambda x: 2.0 * x,
                lambda x: np.broadcast_to(rotation, x.shape[:-1] + (2, 2)), np.zeros(2))

    @staticmethod
    def _modes(density) -> np.ndarray:
        idx = density.local_maxima()
        g = density.grid
        return np.stack([g.centers_x()[idx[:, 0]], g.centers_y()[idx[:, 1]]], axis=1) if len(idx) else np.empty((0, 2))

    @staticmethod
    def _modes_agree(a: np.ndarray, b: np.ndarray, grid) -> bool:
        if len(a) != len(b):
            return False
        cell = np.array([grid.hx, grid.hy])
        return all(np.any(np.all(np.abs(b - m) <= 2.0 * cell + 1e-12, axis=1)) for m in a)

    @staticmethod
    def _trajectory_table(trajectory) -> SeriesTable:
        d = trajectory.states.shape[1]
        table = SeriesTable(['t'] + [f'x{i + 1}' for i in range(d)])
        for t, x in zip(trajectory.times, trajectory.states):
            table.append(float(t), *x.tolist())
        return table

    @staticmethod
    def _ensemble_table(ensemble: ParticleEnsemble) -> SeriesTable:
        table = SeriesTable(['id'] + [f'x{i + 1}' for i in range(ensemble.dimension)])
        for i, x in enumerate(ensemble.particles):
            table.append(i, *x.tolist())
        return table

    def _record(self, config: ExperimentConfig, checksum: str, verdict: str, artifacts: Optional[RunArtifacts],
                started_at: datetime, runtime: float, error: Optional[str] = None) -> None:
        """Append the run to the SQLite ledger; ledger failures never fail the run."""
        if not settings.RUN_LEDGER_ENABLED:
            return
        report = artifacts.report if artifacts is not None else None
        measured = report.measured if report is not None else (artifacts.summary if artifacts is not None else {})
        seeds = dict(artifacts.seeds) if artifacts is not None else {'master': config.numerics.seed}
        if report is not None:
            seeds.update(report.seeds)
        try:
            with self._ledger_lock:
                Path(config.output_dir).mkdir(parents=True, exist_ok=True)
                init_database(ledger_url(config.output_dir, settings.RUN_LEDGER_FILENAME))
                with get_db_session() as session:
                    self.run_repository.create(
                        session,
                        experiment=config.experiment,
                        claim_id=config.claim,
                        label=config.label,
                        verdict=verdict,
                        exit_code=EXIT_CODES[verdict],
                        measured_json=json.dumps(measured, default=self.artifact_service.json_default),
                        bound_json=json.dumps(report.bound if report is not None else {},
                                              default=self.artifact_service.json_default),
                        seeds_json=json.dumps(seeds),
                        config_checksum=checksum,
                        output_dir=str(config.output_dir),
                        error_message=error[:1000] if error else None,
                        runtime_seconds=runtime,
                        started_at=started_at,
                        finished_at=datetime.now(timezone.utc)
                    )
        except Exception as e:
            logger.warning(f"Could not record run '{config.label}' in the ledger: {e}")
