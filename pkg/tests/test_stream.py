import numpy as np
import pytest

from streaming.oracles import EncodingError, Problem, f0, f2, matrix_dimension, mvmult, oracle, pmww
from streaming.stream import (
    MAX_FREQUENCY, Stream, StreamFormatError, StreamKind, StreamUpdate,
    gen_stream, load_stream, matrix_vector_stream, read_stream_file, read_text_stream,
    split_matrix_vector, split_text_pattern, text_pattern_stream, write_stream_file, write_text_stream,
)


class TestStream:
    def test_frequency_vector_aggregates_updates(self):
        stream = Stream.from_updates(5, [(1, 3), (4, -2), (1, -1), StreamUpdate(0, 7)])
        assert stream.frequency_vector().tolist() == [7, 2, 0, 0, -2]
        assert stream.frequency_vector(8).tolist()[5:] == [0, 0, 0]
        assert stream.max_abs_frequency() == 7
        assert len(stream) == 4
        assert list(stream)[1] == StreamUpdate(4, -2)

    def test_updates_outside_the_universe_are_rejected(self):
        with pytest.raises(StreamFormatError):
            Stream(4, [4], [1])
        with pytest.raises(StreamFormatError):
            Stream(4, [0, 1], [1])
        with pytest.raises(StreamFormatError):
            Stream(0, [], [])
        with pytest.raises(StreamFormatError):
            Stream(4, [1], [1]).frequency_vector(2)

    def test_from_frequencies_skips_zeros(self):
        stream = Stream.from_frequencies([0, 5, 0, -1])
        assert stream.indices.tolist() == [1, 3]
        assert stream.universe_size == 4

    def test_streams_are_immutable(self, small_items_stream):
        with pytest.raises(ValueError):
            small_items_stream.indices[0] = 2


class TestGenerators:
    def test_same_seed_same_stream(self):
        assert gen_stream('uniform-items', 32, m=100, seed=5) == gen_stream('uniform-items', 32, m=100, seed=5)
        assert gen_stream('uniform-items', 32, m=100, seed=5) != gen_stream('uniform-items', 32, m=100, seed=6)

    def test_uniform_frequencies_cover_the_universe(self):
        stream = gen_stream(StreamKind.UNIFORM_FREQUENCIES, 64, seed=2)
        assert sorted(stream.indices.tolist()) == list(range(64))
        assert 0 <= stream.deltas.min() and stream.deltas.max() <= MAX_FREQUENCY

    def test_matrix_vector_layout(self):
        stream = gen_stream('matrix-vector', 4, seed=3)
        assert stream.universe_size == 20
        matrix, vector = split_matrix_vector(stream, 4)
        assert matrix.shape == (4, 4) and vector.size == 4

    def test_text_pattern_is_a_masked_substring(self):
        n, q = 64, 8
        stream = gen_stream('text-pattern', n, q=q, seed=9, alphabet=3)
        text, pattern = split_text_pattern(stream, n)
        assert pattern.size == q
        assert set(text.tolist()) <= {0, 1, 2}
        assert pmww(text, pattern, wildcard=n) >= 1

    def test_generator_arguments_are_checked(self):
        with pytest.raises(ValueError):
            gen_stream('text-pattern', 8, q=9)
        with pytest.raises(ValueError):
            gen_stream('uniform-items', 0)
        with pytest.raises(ValueError):
            gen_stream('zipf', 8)


class TestStreamFiles:
    def test_binary_and_text_files_agree(self, tmp_path):
        stream = Stream(10, [1, 9, 1], [5, -3, 2])
        write_stream_file(str(tmp_path / 'a.sips'), stream)
        write_text_stream(str(tmp_path / 'a.txt'), stream)
        assert read_stream_file(str(tmp_path / 'a.sips')) == stream
        assert read_text_stream(str(tmp_path / 'a.txt'), 10) == stream
        assert load_stream(str(tmp_path / 'a.sips')) == stream
        assert load_stream(str(tmp_path / 'a.txt'), 10) == stream

    def test_text_stream_comments_and_inferred_universe(self, tmp_path):
        path = tmp_path / 's.txt'
        path.write_text("# header\n3 1\n0 -2\n")
        stream = read_text_stream(str(path))
        assert stream.universe_size == 4
        assert stream.frequency_vector().tolist() == [-2, 0, 0, 1]

    def test_malformed_files(self, tmp_path):
        bad_magic = tmp_path / 'bad.sips'
        bad_magic.write_bytes(b"NOPE" + b"\x00" * 20)
        with pytest.raises(StreamFormatError):
            read_stream_file(str(bad_magic))

        stream = Stream(4, [1, 2], [1, 1])
        path = tmp_path / 'trunc.sips'
        write_stream_file(str(path), stream)
        path.write_bytes(path.read_bytes()[:-3])
        with pytest.raises(StreamFormatError):
            read_stream_file(str(path))

        lonely = tmp_path / 'lonely.txt'
        lonely.write_text("1 2\n3\n")
        with pytest.raises(StreamFormatError):
            read_text_stream(str(lonely))

    def test_universe_mismatch(self, tmp_path):
        path = tmp_path / 's.sips'
        write_stream_file(str(path), Stream(4, [1], [1]))
        with pytest.raises(StreamFormatError):
            load_stream(str(path), 8)


class TestOracles:
    def test_frequency_moments(self, small_items_stream):
        assert f2(small_items_stream) == 6
        assert f0(small_items_stream) == 3
        deleted = Stream(4, [1, 1, 2], [1, -1, 3])
        assert f0(deleted) == 1 and f2(deleted) == 9

    def test_mvmult(self):
        matrix = np.array([[1, 2], [3, 4]])
        assert mvmult(matrix, [5, 6]) == [17, 39]
        stream = matrix_vector_stream(matrix, [5, 6])
        assert matrix_dimension(stream) == 2
        assert oracle(Problem.MVMULT, stream) == [17, 39]
        with pytest.raises(EncodingError):
            mvmult(matrix, [1, 2, 3])

    def test_pmww_counts_wildcard_windows(self):
        text = [0, 1, 0, 1, 2]
        assert pmww(text, [0, 1], wildcard=5) == 2
        assert pmww(text, [5, 1], wildcard=5) == 2
        assert pmww(text, [5, 5], wildcard=5) == 4
        stream = text_pattern_stream(text, [1, 5])
        assert oracle('PMWW', stream, 5) == 2
        with pytest.raises(EncodingError):
            oracle('PMWW', stream)
        with pytest.raises(EncodingError):
            pmww(text, [], wildcard=5)

    def test_matrix_dimension_rejects_other_universes(self):
        with pytest.raises(EncodingError):
            matrix_dimension(Stream(7, [0], [1]))
