"""Contactless Fingerprint

Toolkit for verification-mode recognition of contactless finger photos,
fusing a siamese-network embedding score with a minutiae match score.

Key Components:
- FeatureExtractor: photo -> (embedding, minutiae) with per-stage timings
- EnrollmentService: enroll / verify / list / remove against a template store
- TemplateRepository: SQLite index plus template files
- Siamese network: numpy forward/backward, contrastive loss, ADAM training
- Evaluation: pair protocol, EER / FMR100 / FMR1000, CSV reports
- Synthetic: procedural finger datasets for offline experiments

"""

from pathlib import Path
from typing import Optional

from .core.enrollment import EnrollmentService
from .core.models import Decision, Minutia, MinutiaeSet, MinutiaKind, Template, VerificationResult
from .core.pipeline import BaseEmbedder, FeatureExtractor, Features, SiameseEmbedder
from .core.settings import SystemConfig
from .errors import FingerprintError, ParameterError
from .network.architecture import NetworkSpec
from .network.checkpoint import load_checkpoint
from .persistence.repository import TemplateRepository

__version__ = "0.1.0"

__all__ = [
    "EnrollmentService",
    "Decision",
    "Minutia",
    "MinutiaeSet",
    "MinutiaKind",
    "Template",
    "VerificationResult",
    "BaseEmbedder",
    "FeatureExtractor",
    "Features",
    "SiameseEmbedder",
    "SystemConfig",
    "FingerprintError",
    "TemplateRepository",
    "create_extractor",
    "create_enrollment_service",
]


def create_extractor(config: SystemConfig, checkpoint: Optional[str] = None) -> FeatureExtractor:
    """Create a feature extractor from a trained checkpoint.

    Args:
        config: System configuration (architecture and minutiae settings)
        checkpoint: Checkpoint path; defaults to ``config.checkpoint``

    Returns:
        FeatureExtractor with a SiameseEmbedder
    """
    path = checkpoint or config.checkpoint
    if not path:
        raise ParameterError("no network checkpoint configured; run 'train' or pass --ckpt")
    params = load_checkpoint(Path(path), NetworkSpec.named(config.architecture))
    return FeatureExtractor(SiameseEmbedder(params), config.minutiae_settings())


def create_enrollment_service(
    config: Optional[SystemConfig] = None, extractor: Optional[FeatureExtractor] = None
) -> EnrollmentService:
    """Create an enrollment service.

    Args:
        config: System configuration; loaded from the default location when omitted
        extractor: Optional custom feature extractor (e.g. a mock embedder in tests)

    Returns:
        Configured EnrollmentService
    """
    config = config or SystemConfig.load()
    return EnrollmentService(
        extractor=extractor or create_extractor(config),
        repository=TemplateRepository(config.resolved_store_dir()),
        calibration=config.calibration(),
        weights=config.weights(),
        tolerances=config.tolerances(),
        threshold=config.operating_threshold,
    )
