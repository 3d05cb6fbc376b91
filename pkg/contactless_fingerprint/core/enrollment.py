"""Enrollment and verification workflow.

Coordinates the verification-mode lifecycle:
1. Enroll: three photos -> mean embedding + minutiae of the first photo -> template
2. Verify: probe photo vs the claimed identity's template -> fused score -> decision
3. Administration: list and (idempotently) remove templates

The EnrollmentService owns the workflow; the CLI is a thin wrapper around it.
"""

import logging
import time
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..config import DEFAULT_ENROLLMENT_PHOTOS
from ..errors import CalibrationError, EnrollmentConflictError, IdentityNotFoundError, ParameterError
from ..network.loss import similarity
from ..persistence.repository import TemplateRepository, validate_user_id
from .fusion import fuse, normalize
from .matcher import match_minutiae
from .models import Decision, FusionWeights, MatcherTolerances, ScoreCalibration, Template, VerificationResult
from .pipeline import FeatureExtractor

logger = logging.getLogger(__name__)


class AuditLogger:
    """Writes workflow events to the store's audit log."""

    def __init__(self, repository: TemplateRepository, source: str):
        self.repository = repository
        self.source = source

    def _log(self, level: str, message: str, user_id: Optional[str] = None, **extra):
        self.repository.add_log(self.source, level, message, user_id=user_id, extra=extra or None)

    def info(self, message: str, user_id: Optional[str] = None, **extra):
        self._log("info", message, user_id, **extra)

    def warning(self, message: str, user_id: Optional[str] = None, **extra):
        self._log("warning", message, user_id, **extra)


class EnrollmentService:
    """Enrollment and one-to-one verification against a template store."""

    def __init__(
        self,
        extractor: FeatureExtractor,
        repository: TemplateRepository,
        calibration: Optional[ScoreCalibration] = None,
        weights: FusionWeights = FusionWeights(),
        tolerances: MatcherTolerances = MatcherTolerances(),
        threshold: Optional[float] = None,
    ):
        """Initialize the service.

        Args:
            extractor: Feature extractor with a configured embedder
            repository: Template store
            calibration: Min-max bounds for both branches (required to verify)
            weights: Fusion weights
            tolerances: Minutiae matcher tolerances
            threshold: Default operating threshold for ``verify``
        """
        self.extractor = extractor
        self.repository = repository
        self.calibration = calibration
        self.weights = weights
        self.tolerances = tolerances
        self.threshold = threshold

    def enroll(self, user_id: str, photos: Sequence[np.ndarray]) -> Template:
        """Enroll ``user_id`` from exactly three photos.

        Raises:
            ParameterError: wrong photo count or invalid user id
            EnrollmentConflictError: the user id is already enrolled
        """
        validate_user_id(user_id)
        if len(photos) != DEFAULT_ENROLLMENT_PHOTOS:
            raise ParameterError(f"enrollment needs exactly {DEFAULT_ENROLLMENT_PHOTOS} photos, got {len(photos)}")
        if self.repository.has_template(user_id):
            raise EnrollmentConflictError(f"user '{user_id}' is already enrolled")

        embeddings = np.stack([np.asarray(self.extractor.embed(p), dtype=np.float64) for p in photos])
        mean_embedding = embeddings.mean(axis=0)
        if not np.all(np.isfinite(mean_embedding)):
            raise ParameterError("enrollment embedding is not finite")
        minutiae = self.extractor.extract_minutiae(photos[0])

        template = Template(
            user_id=user_id,
            mean_embedding=mean_embedding,
            minutiae=minutiae,
            enrolled_at=datetime.now(timezone.utc),
        )
        self.repository.save_template(template)
        AuditLogger(self.repository, "enroll").info(f"Enrolled '{user_id}'", user_id, minutiae=len(minutiae))
        logger.info(f"Enrolled '{user_id}' with {len(minutiae)} minutiae")
        return template

    def verify(self, user_id: str, photo: np.ndarray, threshold: Optional[float] = None) -> VerificationResult:
        """Verify a probe photo against the claimed identity.

        Raises:
            IdentityNotFoundError: ``user_id`` is not enrolled
            CalibrationError: no score calibration is configured
            ParameterError: no threshold given or configured
        """
        template = self.repository.get_template(user_id)
        if template is None:
            raise IdentityNotFoundError(f"user '{user_id}' is not enrolled")
        if self.calibration is None:
            raise CalibrationError("no score calibration configured; run 'train' or 'evaluate' first")
        threshold = self.threshold if threshold is None else threshold
        if threshold is None:
            raise ParameterError("no operating threshold configured; pass --threshold or run 'evaluate'")

        features = self.extractor.extract(photo)
        start = time.perf_counter()
        embedding_score = similarity(features.embedding, template.mean_embedding)
        match = match_minutiae(features.minutiae, template.minutiae, self.tolerances)
        sd_norm = normalize(embedding_score, self.calibration.min_d, self.calibration.max_d)
        sm_norm = normalize(match.value, self.calibration.min_m, self.calibration.max_m)
        fused = fuse(sd_norm, sm_norm, self.weights)
        timings = dict(features.timings)
        timings["matching"] = time.perf_counter() - start

        result = VerificationResult(
            user_id=user_id,
            fused_score=fused,
            decision=Decision.MATCH if fused >= threshold else Decision.NO_MATCH,
            embedding_score=embedding_score,
            minutiae_score=match.value,
            embedding_normalized=sd_norm,
            minutiae_normalized=sm_norm,
            threshold=threshold,
            correspondences=match.correspondences,
            timings=timings,
            verified_at=datetime.now(timezone.utc),
        )
        audit = AuditLogger(self.repository, "verify")
        record = audit.info if result.is_match else audit.warning
        record(f"Verified '{user_id}': {result.decision.value}", user_id, fused_score=fused, threshold=threshold)
        logger.info(f"Verified '{user_id}': S_f={fused:.6f} threshold={threshold:.6f} -> {result.decision.value}")
        return result

    def list_users(self) -> List[Dict[str, Any]]:
        return self.repository.list_templates()

    def remove(self, user_id: str) -> bool:
        """Remove a template; removing an unknown id is a no-op."""
        removed = self.repository.remove_template(user_id)
        if removed:
            AuditLogger(self.repository, "remove").info(f"Removed '{user_id}'", user_id)
        return removed
