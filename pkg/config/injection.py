"""
Dependency injection configuration using injector.
"""
from injector import Module, provider, singleton

import config.settings as settings
from services.field_service import FieldService
from services.sde_service import SDEService
from services.contraction_service import ContractionService
from services.measure_service import MeasureService
from services.fpe_service import FokkerPlanckService
from services.hopfield_service import HopfieldService
from services.verification_service import VerificationService
from services.artifact_service import ArtifactService
from services.experiment_service import ExperimentService
from repositories.verification_run_repository import VerificationRunRepository


class ServiceModule(Module):
    """Module that configures dependency injection bindings."""

    @singleton
    @provider
    def provide_field_service(self) -> FieldService:
        """Provide field catalog service instance."""
        return FieldService()

    @singleton
    @provider
    def provide_sde_service(self) -> SDEService:
        """Provide SDE simulation service instance."""
        return SDEService(workers=settings.WORKERS)

    @singleton
    @provider
    def provide_contraction_service(self) -> ContractionService:
        """Provide contraction analysis service instance."""
        return ContractionService()

    @singleton
    @provider
    def provide_measure_service(self) -> MeasureService:
        """Provide measure service instance."""
        return MeasureService()

    @singleton
    @provider
    def provide_fpe_service(self, measure_service: MeasureService) -> FokkerPlanckService:
        """Provide Fokker-Planck service instance with measure service injected."""
        return FokkerPlanckService(measure_service)

    @singleton
    @provider
    def provide_hopfield_service(self, field_service: FieldService) -> HopfieldService:
        """Provide Hopfield service instance with field service injected."""
        return HopfieldService(field_service)

    @singleton
    @provider
    def provide_verification_service(
        self,
        field_service: FieldService,
        sde_service: SDEService,
        contraction_service: ContractionService,
        measure_service: MeasureService,
        fpe_service: FokkerPlanckService,
        hopfield_service: HopfieldService
    ) -> VerificationService:
        """Provide verification service instance with dependencies injected."""
        return VerificationService(
            field_service,
            sde_service,
            contraction_service,
            measure_service,
            fpe_service,
            hopfield_service
        )

    @singleton
    @provider
    def provide_artifact_service(self) -> ArtifactService:
        """Provide artifact service instance."""
        return ArtifactService()

    @singleton
    @provider
    def provide_experiment_service(
        self,
        field_service: FieldService,
        sde_service: SDEService,
        contraction_service: ContractionService,
        measure_service: MeasureService,
        fpe_service: FokkerPlanckService,
        hopfield_service: HopfieldService,
        verification_service: VerificationService,
        artifact_service: ArtifactService,
        run_repository: VerificationRunRepository
    ) -> ExperimentService:
        """Provide experiment service instance with dependencies injected."""
        return ExperimentService(
            field_service,
            sde_service,
            contraction_service,
            measure_service,
            fpe_service,
            hopfield_service,
            verification_service,
            artifact_service,
            run_repository
        )

    # Repository Providers
    @singleton
    @provider
    def provide_verification_run_repository(self) -> VerificationRunRepository:
        """Provide run ledger repository instance."""
        return VerificationRunRepository()
