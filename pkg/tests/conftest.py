import pytest

from pipesearch.enums import FeatureType
from pipesearch.ingest import ColumnSchema, DatasetSchema


@pytest.fixture
def adult_schema() -> DatasetSchema:
    """Census-income style schema: integer age, four categoricals, a
    categorical target."""
    return DatasetSchema(
        dataset_name="adult_data",
        columns=(
            ColumnSchema("field_age", "age", FeatureType.integer),
            ColumnSchema("field_workclass", "workclass", FeatureType.categorical),
            ColumnSchema("field_education", "education", FeatureType.categorical),
            ColumnSchema("field_race", "race", FeatureType.categorical),
            ColumnSchema("field_sex", "sex", FeatureType.categorical),
            ColumnSchema("field_salary", "salary", FeatureType.categorical),
        ),
        target_name="field_salary",
    )


@pytest.fixture
def numeric_schema() -> DatasetSchema:
    """Two numeric feature columns and a categorical target."""
    return DatasetSchema(
        dataset_name="points_data",
        columns=(
            ColumnSchema("field_x", "x", FeatureType.float),
            ColumnSchema("field_y", "y", FeatureType.float),
            ColumnSchema("field_label", "label", FeatureType.categorical),
        ),
        target_name="field_label",
    )


@pytest.fixture
def text_schema() -> DatasetSchema:
    """Text-only features: grounding must go sparse."""
    return DatasetSchema(
        dataset_name="mail_data",
        columns=(
            ColumnSchema("field_subject", "subject", FeatureType.text),
            ColumnSchema("field_body", "body", FeatureType.text),
            ColumnSchema("field_spam", "spam", FeatureType.categorical),
        ),
        target_name="field_spam",
    )
