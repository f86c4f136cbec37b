import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pipesearch.enums import FeatureType
from pipesearch.errors import ConfigError, InvariantViolation, ParseError
from pipesearch.ingest import (
    ColumnSchema,
    DatasetSchema,
    facts_to_schema,
    infer_type,
    load_csv,
    normalize_column_name,
    normalize_dataset_name,
    to_initial_facts,
)


class TestInferType:
    def test_integer_literals(self):
        assert infer_type(["3", "7", "2"]) is FeatureType.integer

    def test_mixed_int_real_literals(self):
        assert infer_type(["3.5", "7", "2"]) is FeatureType.float

    def test_low_distinct_ratio_is_categorical(self):
        values = [f"name_{i % 12}" for i in range(1000)]
        assert infer_type(values) is FeatureType.categorical

    def test_all_distinct_short_column_is_text(self):
        assert infer_type(["1.5", "2.0", "x"]) is FeatureType.text

    def test_repeated_few_strings_is_categorical(self):
        assert infer_type(["red", "blue", "red", "blue", "red"]) is FeatureType.categorical

    def test_missing_tokens_ignored_for_inference(self):
        assert infer_type(["3", "?", "7", "", "2"]) is FeatureType.integer

    def test_all_missing_column_raises_untyped(self):
        with pytest.raises(ParseError, match="untyped column"):
            infer_type(["", "?", "na"])

    def test_scientific_notation_is_float(self):
        assert infer_type(["1e3", "2.5", "-4"]) is FeatureType.float

    @given(st.lists(
        st.sampled_from(["1", "2.5", "x", "red", "?", "409", "haystack needle"]),
        min_size=1, max_size=40))
    @settings(max_examples=60, deadline=None)
    def test_permutation_invariant(self, values):
        try:
            forward = infer_type(values)
        except ParseError:
            with pytest.raises(ParseError):
                infer_type(list(reversed(values)))
            return
        assert infer_type(list(reversed(values))) is forward
        assert infer_type(sorted(values)) is forward


class TestNormalization:
    def test_column_names(self):
        assert normalize_column_name("Age") == "field_age"
        assert normalize_column_name("hours-per-week") == "field_hours_per_week"
        assert normalize_column_name("field_age") == "field_age"

    def test_dataset_names(self):
        assert normalize_dataset_name("adult.csv") == "adult_data"
        assert normalize_dataset_name("/tmp/Spam Base.CSV") == "spam_base_data"


class TestLoadCsv:
    def _write(self, tmp_path, text, name="adult.csv"):
        p = tmp_path / name
        p.write_text(text, encoding="utf-8")
        return p

    def test_loads_and_infers_types(self, tmp_path):
        path = self._write(tmp_path, "age,workclass,salary\n39,State-gov,<=50K\n50,Private,>50K\n38,Private,<=50K\n")
        ds = load_csv(path, target_name="salary")
        assert ds.schema.dataset_name == "adult_data"
        by_name = {c.name: c.ftype for c in ds.schema.columns}
        assert by_name["field_age"] is FeatureType.integer
        assert ds.schema.target_name == "field_salary"
        assert ds.row_count == 3
        # integer column parses to typed values at load
        assert ds.columns["field_age"] == [39, 50, 38]

    def test_header_only_file_rejected(self, tmp_path):
        path = self._write(tmp_path, "age\n")
        with pytest.raises(ParseError, match="2 rows"):
            load_csv(path, target_name="age")

    def test_ragged_row_names_line_number(self, tmp_path):
        path = self._write(tmp_path, "a,b,c\n1,2,3\n4,5\n")
        with pytest.raises(ParseError) as err:
            load_csv(path, target_name="c")
        assert err.value.line == 3

    def test_missing_target_is_config_error(self, tmp_path):
        path = self._write(tmp_path, "a,b\n1,2\n3,4\n")
        with pytest.raises(ConfigError):
            load_csv(path, target_name="nope")

    def test_type_overrides_win(self, tmp_path):
        path = self._write(tmp_path, "a,b\n1,2\n3,4\n1,2\n")
        ds = load_csv(path, target_name="b",
                      type_overrides={"a": FeatureType.categorical})
        assert ds.schema.resolve("field_a").ftype is FeatureType.categorical

    def test_missing_cells_recorded_not_dropped(self, tmp_path):
        path = self._write(tmp_path, "a,b\n1,x\n?,y\n3,x\n")
        ds = load_csv(path, target_name="b")
        assert ds.columns["field_a"] == [1, None, 3]
        assert ds.row_count == 3

    def test_alternate_delimiter(self, tmp_path):
        path = self._write(tmp_path, "a;b\n1;x\n2;y\n", name="semi.csv")
        ds = load_csv(path, target_name="b", delimiter=";")
        assert ds.schema.dataset_name == "semi_data"
        assert ds.columns["field_a"] == [1, 2]


class TestSchema:
    def test_duplicate_columns_rejected(self):
        with pytest.raises(InvariantViolation):
            DatasetSchema(
                dataset_name="d_data",
                columns=(
                    ColumnSchema("field_a", "a", FeatureType.integer),
                    ColumnSchema("field_a", "a", FeatureType.float),
                ),
                target_name="field_a",
            )

    def test_train_schema_requires_target(self):
        with pytest.raises(InvariantViolation):
            DatasetSchema(
                dataset_name="d_data",
                columns=(ColumnSchema("field_a", "a", FeatureType.integer),),
                target_name="field_missing",
            )

    def test_round_trip_json(self, adult_schema):
        doc = adult_schema.to_json_dict()
        assert DatasetSchema.from_json_dict(doc) == adult_schema


class TestInitialFacts:
    def test_adult_facts_render_expected_predicates(self, adult_schema):
        rendered = {str(f) for f in to_initial_facts(adult_schema)}
        assert "datatype(adult_data,train)" in rendered
        assert "has_field(data,field_age)" in rendered
        assert "has_type(field_age,integer)" in rendered
        assert "has_targetfield(adult_data,field_salary)" in rendered

    def test_fact_count_is_two_plus_two_per_column(self, adult_schema, numeric_schema):
        for schema in (adult_schema, numeric_schema):
            facts = to_initial_facts(schema)
            assert len(facts) == 2 + 2 * len(schema.columns)

    def test_round_trip_facts_schema_facts(self, adult_schema):
        facts = to_initial_facts(adult_schema)
        restored = facts_to_schema(facts)
        assert {str(f) for f in to_initial_facts(restored)} == {str(f) for f in facts}
        assert restored.target_name == adult_schema.target_name
        assert {c.name: c.ftype for c in restored.columns} == {
            c.name: c.ftype for c in adult_schema.columns}
