"""
Shared fixtures: services wired the way main.py wires them.
"""
import pytest
from injector import Injector

from config.injection import ServiceModule
from services.field_service import FieldService
from services.sde_service import SDEService
from services.contraction_service import ContractionService
from services.measure_service import MeasureService
from services.fpe_service import FokkerPlanckService
from services.hopfield_service import HopfieldService
from services.verification_service import VerificationService
from services.artifact_service import ArtifactService
from services.experiment_service import ExperimentService


@pytest.fixture(scope='session')
def injector():
    return Injector([ServiceModule()])


@pytest.fixture
def field_service(injector) -> FieldService:
    return injector.get(FieldService)


@pytest.fixture
def sde_service() -> SDEService:
    return SDEService(workers=2)


@pytest.fixture
def contraction_service(injector) -> ContractionService:
    return injector.get(ContractionService)


@pytest.fixture
def measure_service(injector) -> MeasureService:
    return injector.get(MeasureService)


@pytest.fixture
def fpe_service(injector) -> FokkerPlanckService:
    return injector.get(FokkerPlanckService)


@pytest.fixture
def hopfield_service(injector) -> HopfieldService:
    return injector.get(HopfieldService)


@pytest.fixture
def verification_service(injector) -> VerificationService:
    return injector.get(VerificationService)


@pytest.fixture
def artifact_service(injector) -> ArtifactService:
    return injector.get(ArtifactService)


@pytest.fixture
def experiment_service(injector) -> ExperimentService:
    return injector.get(ExperimentService)


@pytest.fixture
def ou(field_service):
    """f = -0.5 x with G = 0.4 I."""
    return field_service.catalog_pair('ou_linear', {'c': 0.5}, 'constant_isotropic_diffusion', {'omega': 0.4})


@pytest.fixture(autouse=True)
def isolated_output(monkeypatch, tmp_path):
    """Keep ledgers and artifacts of every test inside its tmp_path."""
    import config.settings as settings
    monkeypatch.setattr(settings, 'OUTPUT_DIR', None)
    monkeypatch.chdir(tmp_path)
