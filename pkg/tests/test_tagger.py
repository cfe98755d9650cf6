import itertools

import numpy as np
import pytest

from vsearch.errors import InputError
from vsearch.tagger import (
    Segmentation,
    TagAnnotation,
    TaggerConfig,
    TaggerModel,
    TagSchema,
    bio_to_segments,
    entity_f1,
    segments_to_bio,
    train_tagger,
)
from vsearch.tagger.features import FeatureExtractor
from vsearch.tagger.model import _MODE_FAMILIES, _collect_features
from vsearch.textprep import Lexicon


def _logsumexp(values):
    m = max(values)
    return m + np.log(np.exp(np.array(values) - m).sum())


def _enum_chain(em, tr):
    t, y = em.shape
    scores = {}
    for seq in itertools.product(range(y), repeat=t):
        s = sum(em[i, l] for i, l in enumerate(seq))
        s += sum(tr[a, b] for a, b in zip(seq, seq[1:]))
        scores[seq] = s
    return scores


def _enum_segmentations(seg_scores, tr):
    t, max_l, y = seg_scores.shape

    def tilings(pos):
        if pos == t:
            yield ()
            return
        for l in range(1, min(max_l, t - pos) + 1):
            for rest in tilings(pos + l):
                yield ((pos, pos + l),) + rest

    scores = {}
    for tiling in tilings(0):
        for types in itertools.product(range(y), repeat=len(tiling)):
            s = sum(seg_scores[i, j - i - 1, ty] for (i, j), ty in zip(tiling, types))
            s += sum(tr[a, b] for a, b in zip(types, types[1:]))
            if np.isfinite(s):
                scores[tuple((i, j, ty) for (i, j), ty in zip(tiling, types))] = s
    return scores


def _model(world, mode, anns, enforce_bio=False, seed=1):
    cfg = TaggerConfig(mode=mode, enforce_bio=enforce_bio)
    ext = FeatureExtractor(world.lexicons, _MODE_FAMILIES[mode])
    fv = _collect_features(anns, ext, mode != "CRF", cfg.max_segment_len)
    tv = None
    if "LSTM" in mode:
        from vsearch.textprep import Vocabulary
        tv = Vocabulary.build([list(a.tokens) for a in anns])
    model = TaggerModel(cfg, world.lexicons, fv, token_vocab=tv,
                        rng=np.random.default_rng(seed))
    r = np.random.default_rng(seed + 1)
    model.W += r.normal(scale=0.3, size=model.W.shape)
    model.T += r.normal(scale=0.3, size=model.T.shape)
    return model


@pytest.fixture(scope="module")
def short_anns(small_world):
    return [a for a in small_world.annotations if 1 <= len(a.tokens) <= 5][:60]


def test_single_token_zero_scores_partition_is_ln15(small_world, short_anns):
    model = _model(small_world, "CRF", short_anns)
    model.W[:] = 0.0
    model.T[:] = 0.0
    assert model.log_partition(["anything"]) == pytest.approx(np.log(15), abs=1e-10)


def test_crf_partition_matches_exhaustive(small_world, short_anns):
    model = _model(small_world, "CRF", short_anns)
    for ann in short_anns[:10]:
        em, tr = model.chain_scores(list(ann.tokens))
        scores = _enum_chain(em, tr)
        assert model.log_partition(list(ann.tokens)) == pytest.approx(
            _logsumexp(list(scores.values())), abs=1e-8)


def test_crf_decode_matches_exhaustive(small_world, short_anns):
    model = _model(small_world, "CRF", short_anns)
    schema = TagSchema()
    for ann in short_anns[:10]:
        em, tr = model.chain_scores(list(ann.tokens))
        scores = _enum_chain(em, tr)
        best = max(scores.items(), key=lambda kv: kv[1])[0]
        got = tuple(schema.label_id(l) for l in model.decode_labels(list(ann.tokens)))
        assert got == best


def test_crf_constant_emission_shift_identity(small_world, short_anns):
    model = _model(small_world, "CRF", short_anns)
    ann = next(a for a in short_anns if len(a.tokens) == 3)
    before = model.log_partition(list(ann.tokens))
    c = 0.731
    model.W[model.feat_vocab["bias"]] += c  # bias feature fires at every position
    after = model.log_partition(list(ann.tokens))
    assert after - before == pytest.approx(3 * c, abs=1e-8)


def test_crf_empty_query_rejected(small_world, short_anns):
    model = _model(small_world, "CRF", short_anns)
    with pytest.raises(InputError):
        model.log_partition([])


def test_crf_all_o_when_o_strongly_favored(small_world, short_anns):
    model = _model(small_world, "CRF", short_anns)
    model.W[:] = 0.0
    model.T[:] = 0.0
    model.W[model.feat_vocab["bias"], 0] = 50.0  # O label
    seg = model.decode(["data", "engineer", "jobs"])
    assert all(t == "O" for _, _, t in seg.segments)


def test_crf_decode_bio_consistent_with_constraints(small_world, short_anns):
    model = _model(small_world, "CRF", short_anns, enforce_bio=True, seed=7)
    schema = TagSchema()
    for ann in short_anns[:30]:
        labels = model.decode_labels(list(ann.tokens))
        prev = "O"
        for label in labels:
            if label.startswith("I-"):
                etype = label[2:]
                assert prev in (f"B-{etype}", f"I-{etype}")
            prev = label
        assert all(l in schema.labels for l in labels)


def test_scrf_partition_and_decode_match_exhaustive(small_world, short_anns):
    model = _model(small_world, "SCRF", short_anns)
    for ann in short_anns[:10]:
        seg_scores = model.segment_scores(list(ann.tokens))
        scores = _enum_segmentations(seg_scores, model.T)
        assert model.log_partition(list(ann.tokens)) == pytest.approx(
            _logsumexp(list(scores.values())), abs=1e-8)
        best = max(scores.items(), key=lambda kv: kv[1])[0]
        decoded = model.decode(list(ann.tokens))
        got = tuple((s, e, model.schema.type_id(t)) for s, e, t in decoded.segments)
        assert got == best


def test_scrf_probabilities_sum_to_one(small_world, short_anns):
    model = _model(small_world, "SCRF", short_anns)
    ann = next(a for a in short_anns if len(a.tokens) == 4)
    seg_scores = model.segment_scores(list(ann.tokens))
    logz = model.log_partition(list(ann.tokens))
    scores = _enum_segmentations(seg_scores, model.T)
    total = sum(np.exp(s - logz) for s in scores.values())
    assert total == pytest.approx(1.0, abs=1e-8)


def test_scrf_length_one_degenerates_to_chain(small_world, short_anns):
    from vsearch import kernels
    cfg = TaggerConfig(mode="SCRF", max_segment_len=1)
    ext = FeatureExtractor(small_world.lexicons, _MODE_FAMILIES["SCRF"])
    fv = _collect_features(short_anns, ext, True, 1)
    model = TaggerModel(cfg, small_world.lexicons, fv)
    r = np.random.default_rng(5)
    model.W += r.normal(scale=0.3, size=model.W.shape)
    model.T += r.normal(scale=0.3, size=model.T.shape)
    tokens = list(short_anns[0].tokens)
    seg_scores = model.segment_scores(tokens)
    em = seg_scores[:, 0, :]  # L=1: one segment per position
    assert kernels.crf_logz(em, model.T) == pytest.approx(
        model.log_partition(tokens), abs=1e-10)
    chain_path = kernels.crf_viterbi(em, model.T)
    decoded = model.decode(tokens)
    assert [model.schema.type_id(t) for _, _, t in decoded.segments] == list(chain_path)


def test_scrf_lexicon_weight_drives_segmentation():
    lexicons = {"title": Lexicon.from_phrases("title", ["software engineer"])}
    ann = TagAnnotation(("linkedin", "software", "engineer"),
                        ("O", "B-title", "I-title"))
    cfg = TaggerConfig(mode="SCRF")
    ext = FeatureExtractor(lexicons, _MODE_FAMILIES["SCRF"])
    fv = _collect_features([ann], ext, True, cfg.max_segment_len)
    model = TaggerModel(cfg, lexicons, fv)
    model.W[fv["seglx:title"], model.schema.type_id("title")] = 8.0
    decoded = model.decode(["linkedin", "software", "engineer"])
    assert (1, 3, "title") in decoded.segments
    seg_scores = model.segment_scores(["linkedin", "software", "engineer"])
    scores = _enum_segmentations(seg_scores, model.T)
    best = max(scores.items(), key=lambda kv: kv[1])[0]
    assert (1, 3, model.schema.type_id("title")) in best


def test_lstm_scrf_zero_lstm_reduces_to_scrf(small_world, short_anns):
    cfg = TaggerConfig(mode="LSTM-SCRF-all")
    ext = FeatureExtractor(small_world.lexicons, _MODE_FAMILIES["LSTM-SCRF-all"])
    fv = _collect_features(short_anns, ext, True, cfg.max_segment_len)
    from vsearch.textprep import Vocabulary
    tv = Vocabulary.build([list(a.tokens) for a in short_anns])
    lstm_model = TaggerModel(cfg, small_world.lexicons, fv, token_vocab=tv,
                             rng=np.random.default_rng(2))
    for p in (lstm_model.emb.params, lstm_model.proj.params):
        for k in p:
            p[k][:] = 0.0
    for k in lstm_model.lstm.fw.params:
        lstm_model.lstm.fw.params[k][:] = 0.0
        lstm_model.lstm.bw.params[k][:] = 0.0
    plain = TaggerModel(TaggerConfig(mode="SCRF"), small_world.lexicons, fv)
    r = np.random.default_rng(6)
    noise_w = r.normal(scale=0.3, size=plain.W.shape)
    noise_t = r.normal(scale=0.3, size=plain.T.shape)
    lstm_model.W += noise_w
    lstm_model.T += noise_t
    plain.W += noise_w
    plain.T += noise_t
    for ann in short_anns[:10]:
        tokens = list(ann.tokens)
        np.testing.assert_allclose(lstm_model.segment_scores(tokens),
                                   plain.segment_scores(tokens), atol=1e-12)
        assert lstm_model.decode(tokens).segments == plain.decode(tokens).segments


def test_lstm_scrf_gradcheck(small_world, short_anns):
    from vsearch.nn import gradient_check
    model = _model(small_world, "LSTM-SCRF", short_anns[:8], seed=3)
    report = gradient_check(lambda: model.loss_and_grads(short_anns[:4]),
                            model.params(), n_samples=120,
                            rng=np.random.default_rng(4))
    assert report.max_rel_error <= 1e-4


def test_tagger_training_learns_and_round_trips(tmp_path, small_world):
    anns = [a for a in small_world.annotations if a.labels.count("O") < len(a.labels)]
    train = anns[:400]
    model = train_tagger(train, small_world.lexicons,
                         TaggerConfig(mode="SCRF", epochs=4))
    golds = [bio_to_segments(list(a.labels)) for a in train[:150]]
    preds = [model.decode(list(a.tokens)) for a in train[:150]]
    assert entity_f1(golds, preds) >= 0.85

    path = tmp_path / "tagger.vsnn"
    model.save(path)
    loaded = TaggerModel.load(path, small_world.lexicons)
    for ann in small_world.annotations[:100]:
        tokens = list(ann.tokens)
        assert loaded.decode(tokens).segments == model.decode(tokens).segments


def test_feature_locality(small_world, short_anns):
    ext = FeatureExtractor(small_world.lexicons, _MODE_FAMILIES["CRF"])
    tokens = ["data", "engineer", "jobs", "north", "bay", "hiring"]
    edited = list(tokens)
    edited[0] = "zzz"
    before = ext.positions(tokens)
    after = ext.positions(edited)
    # word window is +/-1, lexicon phrases reach 4 tokens: positions beyond
    # +/-3 of the edit cannot change
    for pos in range(4, len(tokens)):
        assert before[pos] == after[pos]


def test_entity_f1_examples():
    full = bio_to_segments(["B-title", "I-title", "O"])
    assert entity_f1([full], [full]) == 1.0
    all_o = bio_to_segments(["O", "O", "O"])
    assert entity_f1([full], [all_o]) == 0.0
    # 2 golds, prediction has 1 correct and 1 wrong-typed -> P = R = 0.5
    gold = bio_to_segments(["B-title", "B-skill"])
    pred = bio_to_segments(["B-title", "B-geo"])
    assert entity_f1([gold], [pred]) == pytest.approx(0.5)
    assert entity_f1([all_o], [all_o]) == 1.0  # degenerate empty corpus
    with pytest.raises(InputError):
        entity_f1([full], [full, full])


def test_bio_segmentation_round_trip():
    labels = ["B-title", "I-title", "O", "B-geo", "O"]
    seg = bio_to_segments(labels)
    assert seg.segments == ((0, 2, "title"), (2, 3, "O"), (3, 4, "geo"), (4, 5, "O"))
    assert segments_to_bio(seg) == labels
    lenient = bio_to_segments(["O", "I-skill", "I-skill"])
    assert (1, 3, "skill") in lenient.segments


def test_segmentation_invariants():
    with pytest.raises(InputError):
        Segmentation(3, ((0, 2, "O"), (2, 3, "O")))  # O longer than 1
    with pytest.raises(InputError):
        Segmentation(3, ((0, 1, "O"), (2, 3, "O")))  # gap
    with pytest.raises(InputError):
        Segmentation(3, ((0, 1, "O"), (1, 2, "O")))  # short cover
