"""Tests for the template store."""

import logging
import sqlite3
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest

from contactless_fingerprint.core.models import Minutia, MinutiaeSet, MinutiaKind, Template
from contactless_fingerprint.errors import EnrollmentConflictError, IngestionError, ParameterError
from contactless_fingerprint.persistence.repository import (
    TemplateRepository,
    template_from_text,
    template_to_text,
    validate_user_id,
)


class FailingCommitConnection(sqlite3.Connection):
    """Connection whose commit always fails, as under a lock timeout."""

    def commit(self):
        raise sqlite3.OperationalError("database is locked")


@pytest.fixture
def store_dir():
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir) / "store"


@pytest.fixture
def repository(store_dir):
    """Create a repository in a temporary directory."""
    return TemplateRepository(store_dir)


@pytest.fixture
def sample_template():
    """Create a sample template with awkward floats and two minutiae."""
    minutiae = MinutiaeSet.from_unsorted(
        (310, 240),
        [
            Minutia(x=120, y=200, theta=33.333333333333336, kind=MinutiaKind.BIFURCATION, quality=0.6180339887498949),
            Minutia(x=40, y=25, theta=270.0, kind=MinutiaKind.TERMINATION, quality=1.0),
        ],
    )
    return Template(
        user_id="alice",
        mean_embedding=np.array([0.1 + 0.2, -1e-300, 12345.678901234567, np.pi] + [0.0] * 12),
        minutiae=minutiae,
        enrolled_at=datetime(2024, 3, 1, 9, 15, 30, 123456, tzinfo=timezone.utc),
    )


class TestTemplateText:
    """Tests for the template text format."""

    def test_layout(self, sample_template):
        lines = template_to_text(sample_template).splitlines()
        assert lines[0] == "TEMPLATE v1 alice 2024-03-01T09:15:30.123456+00:00"
        assert lines[1] == "0.30000000000000004"
        assert lines[17] == "MINUTIAE v1 310 240 2"
        assert len(lines) == 20

    def test_round_trip_is_bit_exact(self, sample_template):
        parsed = template_from_text(template_to_text(sample_template))
        assert parsed.user_id == "alice"
        assert parsed.enrolled_at == sample_template.enrolled_at
        assert parsed.minutiae == sample_template.minutiae
        assert parsed.mean_embedding.tobytes() == sample_template.mean_embedding.tobytes()

    def test_bad_header(self):
        with pytest.raises(ParameterError, match="header"):
            template_from_text("TEMPLATE v9 alice 2024-01-01T00:00:00\n")

    def test_bad_component(self, sample_template):
        text = template_to_text(sample_template).replace("0.30000000000000004", "zero", 1)
        with pytest.raises(ParameterError, match="embedding component"):
            template_from_text(text)


class TestUserIds:
    """Tests for validate_user_id."""

    @pytest.mark.parametrize("user_id", ["alice", "user_01", "a.b-c"])
    def test_valid(self, user_id):
        assert validate_user_id(user_id) == user_id

    @pytest.mark.parametrize("user_id", ["", "..", "a/b", "with space", "semi;colon"])
    def test_invalid(self, user_id):
        with pytest.raises(ParameterError, match="invalid user id"):
            validate_user_id(user_id)


class TestTemplateStorage:
    """Tests for saving, loading, listing and removing templates."""

    def test_save_and_get(self, repository, sample_template):
        path = repository.save_template(sample_template)
        assert path.name == "alice.tpl"
        loaded = repository.get_template("alice")
        assert loaded.mean_embedding.tobytes() == sample_template.mean_embedding.tobytes()
        assert loaded.minutiae == sample_template.minutiae

    def test_survives_reopen(self, store_dir, sample_template):
        TemplateRepository(store_dir).save_template(sample_template)
        reopened = TemplateRepository(store_dir)
        assert reopened.has_template("alice")
        assert reopened.get_template("alice").enrolled_at == sample_template.enrolled_at

    def test_get_unknown(self, repository):
        assert repository.get_template("nobody") is None
        assert not repository.has_template("nobody")

    def test_duplicate_rejected_and_store_unchanged(self, repository, sample_template):
        repository.save_template(sample_template)
        before = (repository.store_dir / "alice.tpl").read_bytes()
        duplicate = Template(
            user_id="alice",
            mean_embedding=np.zeros(16),
            minutiae=MinutiaeSet((310, 240)),
            enrolled_at=datetime.now(timezone.utc),
        )
        with pytest.raises(EnrollmentConflictError, match="already enrolled"):
            repository.save_template(duplicate)
        assert (repository.store_dir / "alice.tpl").read_bytes() == before
        assert len(repository.list_templates()) == 1

    def test_failed_write_leaves_nothing(self, repository, sample_template):
        """A failure while publishing the file rolls back the index row."""
        with patch("contactless_fingerprint.persistence.repository.os.replace", side_effect=OSError("disk full")):
            with pytest.raises(OSError, match="disk full"):
                repository.save_template(sample_template)
        assert not repository.has_template("alice")
        assert not (repository.store_dir / "alice.tpl").exists()
        assert not list(repository.store_dir.glob(".tpl-*"))

    def test_list_templates(self, repository, sample_template):
        repository.save_template(sample_template)
        bob = Template(
            user_id="bob",
            mean_embedding=np.ones(16),
            minutiae=MinutiaeSet((310, 240)),
            enrolled_at=datetime(2024, 3, 2, tzinfo=timezone.utc),
        )
        repository.save_template(bob)
        listed = repository.list_templates()
        assert [row["user_id"] for row in listed] == ["alice", "bob"]
        assert listed[0]["embedding_size"] == 16
        assert listed[0]["minutiae_count"] == 2
        assert listed[1]["file_name"] == "bob.tpl"

    def test_remove_is_idempotent(self, repository, sample_template):
        repository.save_template(sample_template)
        assert repository.remove_template("alice") is True
        assert not (repository.store_dir / "alice.tpl").exists()
        assert repository.remove_template("alice") is False
        assert repository.get_template("alice") is None

    def test_failed_remove_keeps_file_and_row(self, repository, sample_template):
        """The template file survives when the index deletion cannot commit."""
        path = repository.save_template(sample_template)
        connect = sqlite3.connect

        def failing_connect(*args, **kwargs):
            return connect(*args, factory=FailingCommitConnection, **kwargs)

        with patch("contactless_fingerprint.persistence.repository.sqlite3.connect", side_effect=failing_connect):
            with pytest.raises(sqlite3.OperationalError, match="locked"):
                repository.remove_template("alice")
        assert path.exists()
        assert repository.get_template("alice").minutiae == sample_template.minutiae

    def test_corrupt_file_raises_ingestion_error(self, repository, sample_template):
        path = repository.save_template(sample_template)
        path.write_text("garbage\n", encoding="utf-8")
        with pytest.raises(IngestionError, match="corrupt template"):
            repository.get_template("alice")

    def test_missing_file_raises_ingestion_error(self, repository, sample_template):
        repository.save_template(sample_template).unlink()
        with pytest.raises(IngestionError, match="cannot read"):
            repository.get_template("alice")


class TestAuditLog:
    """Tests for the audit log table."""

    def test_add_and_get_logs(self, repository):
        """Logs come back newest first with decoded extras."""
        assert repository.add_log("enroll", "info", "Enrolled 'alice'", user_id="alice", extra={"minutiae": 2})
        repository.add_log("verify", "warning", "Verified 'bob': no-match", user_id="bob")

        logs = repository.get_logs()
        assert [entry["source"] for entry in logs] == ["verify", "enroll"]
        assert logs[1]["extra"] == {"minutiae": 2}
        assert logs[0]["extra"] is None

    def test_filters(self, repository):
        repository.add_log("enroll", "info", "one", user_id="alice")
        repository.add_log("verify", "info", "two", user_id="alice")
        repository.add_log("verify", "warning", "three", user_id="bob")
        assert [e["message"] for e in repository.get_logs(user_id="alice")] == ["two", "one"]
        assert [e["message"] for e in repository.get_logs(source="verify", level="warning")] == ["three"]
        assert len(repository.get_logs(limit=2)) == 2

    def test_timestamps_are_utc(self, repository):
        repository.add_log("remove", "info", "Removed 'alice'", user_id="alice")
        stamp = datetime.fromisoformat(repository.get_logs()[0]["timestamp"])
        assert stamp.utcoffset().total_seconds() == 0

    def test_failed_write_is_logged(self, repository, caplog):
        with patch(
            "contactless_fingerprint.persistence.repository.sqlite3.connect",
            side_effect=sqlite3.OperationalError("disk I/O error"),
        ):
            with caplog.at_level(logging.WARNING, logger="contactless_fingerprint.persistence.repository"):
                assert repository.add_log("verify", "info", "Verified 'bob'") is False
        assert "disk I/O error" in caplog.text
