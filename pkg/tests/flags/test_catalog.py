import pytest
from binfecund.exceptions import CatalogParseError, ConfigurationError
from binfecund.flags.catalog import (
    EnumKind,
    FlagSpec,
    SwitchKind,
    UintKind,
    load_catalog,
    parse_catalog,
    render_flag,
    serialize_catalog,
    total_seed_width,
)


def test_parse_catalog(frame_pointer_catalog):
    catalog = parse_catalog(frame_pointer_catalog)

    assert len(catalog) == 3
    assert [spec.name for spec in catalog.flags] == ["--addrsig", "--frame-pointer", "--stack-alignment"]
    assert isinstance(catalog.flags[0].kind, SwitchKind)
    assert catalog.flags[1].kind == EnumKind(("all", "non-leaf", "none"))
    assert isinstance(catalog.flags[2].kind, UintKind)
    assert catalog.byte_layout == ((0, 1), (1, 1), (2, 2))
    assert catalog.total_width == total_seed_width(catalog) == 4
    assert catalog.index_of("--frame-pointer") == 1


def test_parse_catalog_skips_comments_and_blank_lines():
    catalog = parse_catalog("# flags of the toy compiler\n\n-fa\tswitch\n   \n-fb\tswitch\n")
    assert [spec.name for spec in catalog.flags] == ["-fa", "-fb"]


def test_parse_empty_catalog():
    catalog = parse_catalog("")
    assert len(catalog) == 0
    assert catalog.total_width == 0


@pytest.mark.parametrize(
    ("text", "line_number", "match"),
    [
        ("-fa\tswitch\n-fb switch\n", 2, "single TAB"),
        ("-fa\tswitch\textra\n", 1, "single TAB"),
        ("-fa\tbool\n", 1, "Unknown flag kind"),
        ("-fa\tenum:one\n", 1, "at least 2 values"),
        ("-fa\tenum:a,,b\n", 1, "can't be empty"),
        ("-fa\tenum:a,a\n", 1, "unique"),
        ("-fa\tswitch\n\n-fa\tuint\n", 3, "already declared on line 1"),
        ("-fa\t\n", 1, "missing its kind"),
    ],
)
def test_parse_catalog_errors(text, line_number, match):
    with pytest.raises(CatalogParseError, match=match) as e:
        parse_catalog(text)
    assert e.value.line_number == line_number
    assert str(e.value).startswith(f"line {line_number}:")
    assert isinstance(e.value, ConfigurationError)


def test_serialize_catalog(frame_pointer_catalog):
    catalog = parse_catalog(frame_pointer_catalog)
    assert serialize_catalog(catalog) == frame_pointer_catalog
    assert parse_catalog(serialize_catalog(catalog)) == catalog


def test_load_catalog(tmp_path, frame_pointer_catalog):
    path = tmp_path / "flags.catalog"
    path.write_text(frame_pointer_catalog)
    assert len(load_catalog(str(path))) == 3

    with pytest.raises(CatalogParseError, match="doesn't exist"):
        load_catalog(str(tmp_path / "missing.catalog"))


def test_index_of_unknown_flag(frame_pointer_catalog):
    with pytest.raises(KeyError, match="--unknown"):
        parse_catalog(frame_pointer_catalog).index_of("--unknown")


def test_flag_spec_rejects_whitespace():
    with pytest.raises(ValueError, match="no whitespace"):
        FlagSpec("-f a", SwitchKind())


def test_render_flag():
    assert render_flag(FlagSpec("-fa", SwitchKind()), True) == ["-fa"]
    assert render_flag(FlagSpec("-fa", SwitchKind()), None) == []
    enum = FlagSpec("--fp", EnumKind(("all", "none")))
    assert render_flag(enum, "none") == ["--fp=none"]
    assert render_flag(FlagSpec("--align", UintKind()), 0) == ["--align=0"]

    with pytest.raises(ValueError, match="isn't one of"):
        render_flag(enum, "some")
    with pytest.raises(ValueError, match="between 0 and 255"):
        render_flag(FlagSpec("--align", UintKind()), 256)
