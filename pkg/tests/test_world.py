import pytest

from dcsmlab.errors import ConfigInvalid, Ungrammatical, UnknownToken
from dcsmlab.world import (
    ConceptWorld,
    EOS,
    Token,
    WorldConfig,
    build_world,
)


@pytest.fixture(scope="module")
def world():
    return build_world(WorldConfig())


class TestRegistries:
    def test_sizes(self, world):
        assert len(world.objects) == 16
        assert len(world.attributes) == 8
        assert len(world.compositional) == 11  # 4 relations + 4 locations + 3 negations

    def test_lookup_by_name_and_index(self, world):
        assert world.object("obj03") is world.object(3)
        assert world.attribute("attr01") is world.attribute(1)
        assert world.term("left_of").kind == "relation"

    def test_antonyms_are_symmetric(self, world):
        assert world.antonym("left_of").name == "right_of"
        assert world.antonym(world.antonym("above")).name == "above"

    def test_negation_words_share_one_synonym_class(self, world):
        classes = {world.synonym_class[n] for n in ("but_not", "and_no", "without")}
        assert classes == {"negation"}

    def test_relations_have_distinct_classes(self, world):
        classes = {world.synonym_class[c.name] for c in world.compositional if c.kind == "relation"}
        assert len(classes) == 4

    def test_config_validation(self):
        with pytest.raises(ConfigInvalid):
            build_world(WorldConfig(num_objects=1))
        with pytest.raises(ConfigInvalid):
            build_world(WorldConfig(num_objects=128, dimension=64))


class TestRenderTokenize:
    def test_attribute_caption(self, world):
        clause = (world.attribute(0), world.object(0), world.attribute(1), world.object(1))
        assert world.render(clause) == "attr00 obj00 and attr01 obj01"

    def test_relation_caption(self, world):
        clause = (world.object(2), world.term("left_of"), world.object(5))
        assert world.render(clause) == "obj02 left of obj05"

    def test_negation_caption(self, world):
        clause = (world.object(0), world.term("without"), world.object(1))
        assert world.render(clause) == "obj00 without obj01"

    def test_location_caption(self, world):
        clause = (world.object(4), world.term("to_the_left"))
        assert world.render(clause) == "obj04 to the left"

    def test_tokenize_appends_eos(self, world):
        toks = world.tokenize("obj00 left of obj01")
        assert toks[-1] == EOS
        assert [t.kind for t in toks] == ["obj", "relation", "obj", "eos"]

    def test_greedy_phrase_match_disambiguates_and_no(self, world):
        toks = world.tokenize("obj00 and no obj01")
        assert toks[1] == Token("negation", "and_no")

    def test_bare_and_is_conjunction(self, world):
        toks = world.tokenize("obj00 and obj01")
        assert toks[1].kind == "conj"

    def test_unknown_word(self, world):
        with pytest.raises(UnknownToken):
            world.tokenize("obj00 zebra")

    def test_roundtrip_render_tokenize_parse(self, world):
        clauses = [
            (world.attribute(2), world.object(3), world.attribute(4), world.object(7)),
            (world.object(1), world.term("above"), world.object(9)),
            (world.object(0), world.term("but_not"), world.object(8)),
            (world.object(6), world.term("at_top")),
        ]
        for clause in clauses:
            text = world.render(clause)
            assert world.parse_tokens(world.tokenize(text)) == clause


class TestGrammar:
    def test_trailing_attribute_rejected(self, world):
        with pytest.raises(Ungrammatical):
            world.render((world.object(0), world.attribute(0)))

    def test_leading_relation_rejected(self, world):
        with pytest.raises(Ungrammatical):
            world.render((world.term("left_of"), world.object(0)))

    def test_empty_clause_rejected(self, world):
        with pytest.raises(Ungrammatical):
            world.render(())

    def test_relation_needs_following_object(self, world):
        with pytest.raises(Ungrammatical):
            world.render((world.object(0), world.term("left_of")))


class TestSerialization:
    def test_json_roundtrip(self, world):
        clone = ConceptWorld.from_json(world.to_json())
        assert [o.name for o in clone.objects] == [o.name for o in world.objects]
        assert clone.synonym_class == world.synonym_class
