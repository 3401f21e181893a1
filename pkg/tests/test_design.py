import numpy as np
import pytest

from commfeat.design import (
    ColumnStandardizer, DesignMatrix, NodeFeatures, assemble_design,
    load_features, neighbor_average, standardize, write_features,
)
from commfeat.errors import InputError
from commfeat.factorization import LinkModel
from commfeat.graphs import Graph


def write_csv(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestNodeFeatures:
    def test_shape_checks(self):
        with pytest.raises(InputError, match="2-D"):
            NodeFeatures(np.zeros(3), ("x",), np.ones(3, dtype=bool))
        with pytest.raises(InputError, match="mask shape"):
            NodeFeatures(np.zeros((2, 2)), ("x", "y"), np.ones((2, 1), dtype=bool))
        with pytest.raises(InputError, match="column names"):
            NodeFeatures(np.zeros((2, 2)), ("x",), np.ones((2, 2), dtype=bool))

    def test_observed_cells_must_be_finite(self):
        values = np.array([[1.0, np.inf]])
        with pytest.raises(InputError, match="non-finite"):
            NodeFeatures(values, ("x", "y"), np.ones((1, 2), dtype=bool))
        # the same value is fine when the cell is masked as missing
        mask = np.array([[True, False]])
        NodeFeatures(values, ("x", "y"), mask)


class TestLoadFeatures:
    def test_mean_imputation(self, tmp_path, triangle):
        path = write_csv(tmp_path / "f.csv", "id,x\na,1\nb,\nc,3\n")
        feats = load_features(path, triangle)
        assert feats.values[:, 0] == pytest.approx([1.0, 2.0, 3.0])
        assert feats.missing_mask[:, 0].tolist() == [True, False, True]
        assert feats.column_names == ("x",)

    def test_na_marker_is_missing(self, tmp_path, triangle):
        path = write_csv(tmp_path / "f.csv", "id,x\na,1\nb,NA\nc,3\n")
        feats = load_features(path, triangle)
        assert feats.values[1, 0] == pytest.approx(2.0)
        assert not feats.missing_mask[1, 0]

    def test_all_missing_column_imputes_zero(self, tmp_path, triangle):
        path = write_csv(tmp_path / "f.csv", "id,x\na,\nb,NA\nc,\n")
        feats = load_features(path, triangle)
        assert feats.values[:, 0] == pytest.approx([0.0, 0.0, 0.0])
        assert not feats.missing_mask.any()

    def test_rows_follow_graph_order(self, tmp_path, triangle):
        # file order differs from graph order; rows land by id
        path = write_csv(tmp_path / "f.csv", "id,x\nc,30\na,10\nb,20\n")
        feats = load_features(path, triangle)
        assert feats.values[:, 0] == pytest.approx([10.0, 20.0, 30.0])

    def test_id_column_anywhere(self, tmp_path, triangle):
        path = write_csv(tmp_path / "f.csv", "x,id,y\n1,a,4\n2,b,5\n3,c,6\n")
        feats = load_features(path, triangle)
        assert feats.column_names == ("x", "y")
        assert feats.values[2].tolist() == [3.0, 6.0]

    def test_unmatched_graph_id(self, tmp_path, triangle):
        path = write_csv(tmp_path / "f.csv", "id,x\na,1\nb,2\n")
        with pytest.raises(InputError, match="no feature row for graph node id"):
            load_features(path, triangle)

    def test_non_numeric_cell(self, tmp_path, triangle):
        path = write_csv(tmp_path / "f.csv", "id,x\na,1\nb,oops\nc,3\n")
        with pytest.raises(InputError, match="non-numeric value 'oops' at row 3"):
            load_features(path, triangle)

    def test_missing_id_column(self, tmp_path, triangle):
        path = write_csv(tmp_path / "f.csv", "node,x\na,1\n")
        with pytest.raises(InputError, match="id column 'id' not in header"):
            load_features(path, triangle)

    def test_ragged_row(self, tmp_path, triangle):
        path = write_csv(tmp_path / "f.csv", "id,x\na,1\nb,2,9\nc,3\n")
        with pytest.raises(InputError, match="row 3 has 3 cells"):
            load_features(path, triangle)

    def test_missing_file(self, tmp_path, triangle):
        with pytest.raises(InputError, match="cannot read features"):
            load_features(tmp_path / "absent.csv", triangle)

    def test_empty_file(self, tmp_path, triangle):
        path = write_csv(tmp_path / "f.csv", "")
        with pytest.raises(InputError, match="empty feature file"):
            load_features(path, triangle)


class TestWriteFeatures:
    def test_round_trip(self, tmp_path, triangle, rng):
        original = NodeFeatures(
            rng.normal(size=(3, 2)), ("x", "y"), np.ones((3, 2), dtype=bool)
        )
        path = tmp_path / "out.csv"
        write_features(original, triangle, path)
        back = load_features(path, triangle)
        assert np.array_equal(back.values, original.values)  # repr is exact
        assert back.column_names == original.column_names
        assert back.missing_mask.all()  # imputed cells come back as values


class TestNeighborAverage:
    def test_triangle_means(self, triangle):
        feats = NodeFeatures(
            np.array([[0.0], [3.0], [9.0]]), ("x",), np.ones((3, 1), dtype=bool)
        )
        avg = neighbor_average(feats, triangle)
        assert avg[:, 0] == pytest.approx([6.0, 4.5, 1.5])

    def test_isolated_node_gets_zero_row(self):
        g = Graph(3, frozenset({(0, 1)}), ("a", "b", "c"))
        feats = NodeFeatures(
            np.array([[5.0], [7.0], [11.0]]), ("x",), np.ones((3, 1), dtype=bool)
        )
        avg = neighbor_average(feats, g)
        assert avg[:, 0] == pytest.approx([7.0, 5.0, 0.0])

    def test_row_count_mismatch(self, triangle):
        feats = NodeFeatures(np.zeros((2, 1)), ("x",), np.ones((2, 1), dtype=bool))
        with pytest.raises(InputError, match="must match node count"):
            neighbor_average(feats, triangle)


class TestAssembleDesign:
    @pytest.fixture
    def feats(self, rng):
        return NodeFeatures(
            rng.normal(size=(4, 2)), ("x", "y"), np.ones((4, 2), dtype=bool)
        )

    def test_mode_f_copies_features(self, feats):
        design = assemble_design("F", feats)
        assert design.mode == "F"
        assert design.provenance == ("feature", "feature")
        assert np.array_equal(design.values, feats.values)
        design.values[0, 0] += 1.0
        assert design.values[0, 0] != feats.values[0, 0]

    def test_mode_n_appends_neighbor_average(self, feats, path4):
        design = assemble_design("N", feats, graph=path4)
        assert design.d == 4
        assert design.provenance == ("feature",) * 2 + ("neighbor-avg",) * 2
        assert np.array_equal(design.values[:, :2], feats.values)
        assert np.array_equal(
            design.values[:, 2:], neighbor_average(feats, path4)
        )

    def test_mode_n_requires_graph(self, feats):
        with pytest.raises(InputError, match="requires the graph"):
            assemble_design("N", feats)

    def test_mode_x_prepends_latent_blocks(self, feats, rng):
        model = LinkModel(
            rng.normal(size=(4, 3)), rng.normal(size=(4, 3)), np.zeros(4), 0.0
        )
        design = assemble_design("X", feats, link_model=model)
        assert design.d == 3 + 3 + 2
        assert design.provenance == (
            ("latent-U",) * 3 + ("latent-V",) * 3 + ("feature",) * 2
        )
        assert np.array_equal(design.values[:, :3], model.U)
        assert np.array_equal(design.values[:, 3:6], model.V)
        assert np.array_equal(design.values[:, 6:], feats.values)

    def test_mode_x_requires_model(self, feats):
        with pytest.raises(InputError, match="requires a trained link model"):
            assemble_design("X", feats)

    def test_mode_x_node_count_mismatch(self, feats, rng):
        model = LinkModel(
            rng.normal(size=(3, 2)), rng.normal(size=(3, 2)), np.zeros(3), 0.0
        )
        with pytest.raises(InputError, match="link model covers 3 nodes"):
            assemble_design("X", feats, link_model=model)

    def test_unknown_mode(self, feats):
        with pytest.raises(InputError, match="unknown design mode"):
            assemble_design("Z", feats)


class TestStandardize:
    def test_population_std(self):
        design = DesignMatrix(np.array([[1.0], [2.0], [3.0]]), "F", ("feature",))
        out, (mean, scale) = standardize(design)
        # population std of (1, 2, 3) is sqrt(2/3)
        assert mean[0] == pytest.approx(2.0)
        assert scale[0] == pytest.approx(np.sqrt(2.0 / 3.0))
        assert out.values[:, 0] == pytest.approx([-1.224744871, 0.0, 1.224744871])
        assert out.mode == "F" and out.provenance == ("feature",)

    def test_zero_variance_column_centered_only(self):
        design = DesignMatrix(
            np.array([[5.0, 1.0], [5.0, 3.0]]), "F", ("feature", "feature")
        )
        out, (mean, scale) = standardize(design)
        assert scale[0] == 1.0
        assert out.values[:, 0] == pytest.approx([0.0, 0.0])
        assert out.values[:, 1] == pytest.approx([-1.0, 1.0])

    def test_fit_rows_then_reuse_stats(self, rng):
        values = rng.normal(loc=3.0, scale=2.0, size=(10, 2))
        design = DesignMatrix(values, "F", ("feature", "feature"))
        train = np.arange(6)
        fitted, stats = standardize(design, fit_rows=train)
        # train rows have exactly zero mean / unit scale under train statistics
        assert fitted.values[train].mean(axis=0) == pytest.approx([0.0, 0.0], abs=1e-12)
        assert fitted.values[train].std(axis=0) == pytest.approx([1.0, 1.0])
        # reusing the returned statistics reproduces the same transform
        again, stats2 = standardize(design, stats=stats)
        assert np.array_equal(again.values, fitted.values)
        assert stats2 is stats


class TestColumnStandardizer:
    def test_matches_standardize(self, rng):
        values = rng.normal(size=(8, 3))
        design = DesignMatrix(values, "F", ("feature",) * 3)
        expected, _ = standardize(design)
        got = ColumnStandardizer().fit_transform(values)
        assert np.allclose(got, expected.values, atol=0)

    def test_requires_fit(self):
        from sklearn.exceptions import NotFittedError

        with pytest.raises(NotFittedError):
            ColumnStandardizer().transform(np.zeros((2, 2)))

    def test_column_count_mismatch(self, rng):
        est = ColumnStandardizer().fit(rng.normal(size=(4, 2)))
        with pytest.raises(InputError, match="fitted on 2"):
            est.transform(np.zeros((3, 5)))

    def test_sklearn_clone_compatible(self):
        from sklearn.base import clone

        est = ColumnStandardizer().fit(np.array([[1.0], [2.0]]))
        other = clone(est)
        assert not hasattr(other, "mean_")
