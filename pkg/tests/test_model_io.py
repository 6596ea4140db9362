"""Tests for the versioned model document"""

import json

import numpy as np
import pytest

from overtake_lab.core.factory import resolve_model
from overtake_lab.core.survival import reference_model
from overtake_lab.exceptions import DataFileError, ModelParseError, SchemaVersionError
from overtake_lab.models.survival_models import LogLogisticAft, ModelMode
from overtake_lab.utils.model_io import load_model, model_from_document, model_to_document, save_model


@pytest.fixture
def document():
    return model_to_document(reference_model())


class TestModelDocument:
    """Test saving and loading fitted models"""

    def test_document_layout(self, document):
        assert document["schema_version"] == 1
        assert document["family"] == "log_logistic"
        assert document["mode"] == "paper"
        assert document["gamma"] == 0.253
        assert document["coefficients"][0] == {"name": "cons", "beta": 2.589}
        assert document["fit_meta"] is None

    def test_document_keys(self, document):
        assert list(document) == ["schema_version", "family", "mode", "gamma", "coefficients", "fit_meta"]

    def test_fit_meta_key_on_disk(self, tmp_path):
        model = reference_model().model_copy(update={"fit_meta": {"n": 3}})
        path = tmp_path / "model.json"
        save_model(model, path)

        on_disk = json.loads(path.read_text(encoding="utf-8"))
        assert on_disk["fit_meta"] == {"n": 3}
        assert "fit" not in on_disk

    def test_file_round_trip(self, tmp_path):
        model = LogLogisticAft.from_beta([1.5, 0.1, -0.2], 0.4, names=["pd", "dab"], mode=ModelMode.STANDARD_AFT)
        path = tmp_path / "model.json"
        save_model(model, path)

        assert load_model(path) == model

    def test_fit_meta_survives(self, tmp_path):
        model = reference_model().model_copy(update={"fit_meta": {"n": 12, "converged": True}})
        path = tmp_path / "model.json"
        save_model(model, path)

        assert load_model(path).fit_meta == {"n": 12, "converged": True}

    def test_missing_mode_defaults_to_unscaled(self, document):
        del document["mode"]
        assert model_from_document(document).mode is ModelMode.UNSCALED_SHIFT

    def test_resolve_path(self, tmp_path):
        path = tmp_path / "model.json"
        save_model(reference_model(), path)
        assert resolve_model(path) == reference_model()
        assert resolve_model(str(path)) == reference_model()


class TestModelDocumentErrors:
    """Test rejection of malformed documents"""

    @pytest.mark.parametrize("version", [None, 0, 2, "1"])
    def test_schema_version(self, document, version):
        document["schema_version"] = version
        with pytest.raises(SchemaVersionError) as exc_info:
            model_from_document(document)

        assert exc_info.value.supported == 1

    def test_not_an_object(self):
        with pytest.raises(ModelParseError):
            model_from_document([1, 2, 3])

    def test_other_family(self, document):
        document["family"] = "weibull"
        with pytest.raises(ModelParseError) as exc_info:
            model_from_document(document, "weibull.json")

        assert "weibull" in str(exc_info.value)

    def test_non_positive_gamma(self, document):
        document["gamma"] = 0.0
        with pytest.raises(ModelParseError) as exc_info:
            model_from_document(document)

        assert "gamma" in str(exc_info.value)

    def test_intercept_must_lead(self, document):
        document["coefficients"] = list(reversed(document["coefficients"]))
        with pytest.raises(ModelParseError):
            model_from_document(document)

    def test_syntax_error_location(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{\n  "schema_version": 1,\n  "gamma": ,\n}\n', encoding="utf-8")
        with pytest.raises(ModelParseError) as exc_info:
            load_model(path)

        assert exc_info.value.line == 3
        assert exc_info.value.column is not None

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.json"
        path.write_text("", encoding="utf-8")
        with pytest.raises(ModelParseError):
            load_model(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataFileError):
            load_model(tmp_path / "absent.json")

    def test_document_is_plain_json(self, document):
        assert json.loads(json.dumps(document)) == document


class TestRandomModelDocuments:
    """Test documents for many random coefficient vectors"""

    def test_text_round_trip(self):
        rng = np.random.default_rng(2024)
        modes = list(ModelMode)
        for _ in range(1000):
            model = LogLogisticAft.from_beta(
                rng.normal(0.0, 3.0, size=5),
                float(rng.uniform(0.01, 3.0)),
                mode=modes[int(rng.integers(len(modes)))],
            )
            text = json.dumps(model_to_document(model))
            assert model_from_document(json.loads(text)) == model
