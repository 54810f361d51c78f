import pytest

from homerelay.registry import (
    DEFAULT_POLL_MS,
    ConfigError,
    DeviceSpec,
    UnknownDeviceError,
    parse_config,
    parse_registry_config,
    resolve_device,
)


EXAMPLE = "device ac line=0 policy=indefinite\ndevice cooker line=1 policy=max:1800"


def test_two_device_example():
    reg = parse_registry_config(EXAMPLE)
    assert len(reg) == 2
    assert reg.devices[0] == DeviceSpec("ac", 0, None)
    assert reg.devices[1] == DeviceSpec("cooker", 1, 1800)


def test_empty_config_is_unusable():
    with pytest.raises(ConfigError) as info:
        parse_registry_config("")
    assert info.value.kind == "NoDevices"
    with pytest.raises(ConfigError):
        parse_registry_config("# only comments\n\n")


def test_five_devices_rejected():
    text = "\n".join(
        f"device dev{i} line={i} policy=indefinite" for i in range(5)
    )
    with pytest.raises(ConfigError) as info:
        parse_registry_config(text)
    assert info.value.kind == "TooManyDevices"
    assert info.value.line_no == 5


def test_four_devices_accepted():
    text = "\n".join(
        f"device dev{i} line={i} policy=indefinite" for i in range(4)
    )
    assert len(parse_registry_config(text)) == 4


def test_duplicate_name_rejected():
    text = "device ac line=0 policy=indefinite\ndevice AC line=1 policy=indefinite"
    with pytest.raises(ConfigError) as info:
        parse_registry_config(text)
    assert info.value.kind == "DuplicateName"


def test_duplicate_line_rejected():
    text = "device ac line=3 policy=indefinite\ndevice fan line=3 policy=indefinite"
    with pytest.raises(ConfigError) as info:
        parse_registry_config(text)
    assert info.value.kind == "DuplicateLine"


@pytest.mark.parametrize("field", ["line=8", "line=-1", "line=x", "line="])
def test_bad_line_rejected(field):
    with pytest.raises(ConfigError) as info:
        parse_registry_config(f"device ac {field} policy=indefinite")
    assert info.value.kind == "BadLine"


@pytest.mark.parametrize(
    "policy", ["policy=max:0", "policy=max:86401", "policy=max:", "policy=forever", "policy=max:x"]
)
def test_bad_policy_rejected(policy):
    with pytest.raises(ConfigError) as info:
        parse_registry_config(f"device ac line=0 {policy}")
    assert info.value.kind == "BadPolicy"


def test_unknown_directive_is_an_error():
    with pytest.raises(ConfigError) as info:
        parse_config(EXAMPLE + "\nfrobnicate on")
    assert info.value.kind == "SyntaxError"
    assert info.value.line_no == 3


def test_syntax_errors_carry_line_numbers():
    with pytest.raises(ConfigError) as info:
        parse_config("device ac line=0 policy=indefinite\ndevice broken")
    assert info.value.kind == "SyntaxError"
    assert info.value.line_no == 2


def test_comments_and_blanks_ignored():
    text = "# registry\n\ndevice ac line=0 policy=indefinite  # the AC\n"
    assert len(parse_registry_config(text)) == 1


def test_device_names_canonicalized_to_lowercase():
    reg = parse_registry_config("device FRIDGE line=0 policy=indefinite")
    assert reg.devices[0].name == "fridge"


def test_bad_device_name_rejected():
    with pytest.raises(ConfigError) as info:
        parse_registry_config("device 9lives line=0 policy=indefinite")
    assert info.value.kind == "SyntaxError"


def test_allow_token_poll_ms():
    cfg = parse_config(EXAMPLE + "\nallow +2348012345678\ntoken hunter2\npoll_ms 25")
    assert cfg.allowlist == frozenset({"+2348012345678"})
    assert cfg.token == "hunter2"
    assert cfg.poll_ms == 25


def test_defaults_without_optional_directives():
    cfg = parse_config(EXAMPLE)
    assert cfg.allowlist == frozenset()
    assert cfg.token is None
    assert cfg.poll_ms == DEFAULT_POLL_MS


@pytest.mark.parametrize("line", ["allow 12345", "allow +12", "allow +abc", "allow"])
def test_bad_allow_rejected(line):
    with pytest.raises(ConfigError):
        parse_config(EXAMPLE + "\n" + line)


@pytest.mark.parametrize("line", ["poll_ms 0", "poll_ms -5", "poll_ms fast", "token a b"])
def test_bad_scalar_directives_rejected(line):
    with pytest.raises(ConfigError):
        parse_config(EXAMPLE + "\n" + line)


def test_duplicate_scalar_directives_rejected():
    with pytest.raises(ConfigError):
        parse_config(EXAMPLE + "\ntoken a\ntoken b")
    with pytest.raises(ConfigError):
        parse_config(EXAMPLE + "\npoll_ms 10\npoll_ms 20")


# ---------------------------------------------------------------------------
# resolution

def test_resolve_known_and_unknown():
    reg = parse_registry_config(EXAMPLE)
    assert resolve_device(reg, "ac") == DeviceSpec("ac", 0, None)
    with pytest.raises(UnknownDeviceError):
        resolve_device(reg, "fridge")


def test_resolve_is_bijective_over_registered_names():
    reg = parse_registry_config(
        "device a line=0 policy=indefinite\n"
        "device b line=1 policy=max:60\n"
        "device c line=2 policy=indefinite\n"
        "device d line=3 policy=max:86400\n"
    )
    seen = set()
    for spec in reg:
        resolved = resolve_device(reg, spec.name)
        assert resolved is spec
        assert resolved not in seen
        seen.add(resolved)
    assert seen == set(reg.devices)
