import pytest

from viscowave import load_command_module, main


def test_main_help_command(capsys):
    """Test that the help command works without errors."""
    assert main(["--help"]) == 0
    captured = capsys.readouterr()
    assert "damped wave equation" in captured.out
    assert "commands:" in captured.out
    assert "options:" in captured.out
    assert "global options:" in captured.out


def test_main_no_command(capsys):
    """Test that running main with no command shows the help message."""
    assert main([]) == 0
    captured = capsys.readouterr()
    assert "damped wave equation" in captured.out
    for command in ("kernel-table", "solve", "solve-linear", "oracle-compare"):
        assert command in captured.out


def test_main_invalid_command(capsys):
    """Test that an unknown command is a usage error."""
    assert main(["invalid_command"]) == 2
    assert "invalid choice" in capsys.readouterr().err


def test_main_command_help(capsys):
    assert main(["solve", "--help"]) == 0
    captured = capsys.readouterr()
    assert "--theta" in captured.out
    assert "--config" in captured.out


def test_main_requires_config():
    assert main(["solve", "--silent"]) == 2


def test_main_missing_config_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("main") / "missing.toml"
    assert main(["solve", "--config", str(path), "--silent"]) == 2


def test_main_invalid_config(tmp_path_factory, caplog):
    path = tmp_path_factory.mktemp("main") / "run.toml"
    path.write_text("[model]\nepsilon = 1.0\nc = 1.0\na = 3.0\n")
    assert main(["solve", "--config", str(path), "--silent"]) == 2
    assert "a < b required" in caplog.text


def test_load_command_module():
    """Test that load_command_module loads a valid command module."""
    module = load_command_module("kernel_table")
    assert hasattr(module, "register")
    assert hasattr(module, "execute")


def test_load_command_module_invalid():
    "Test that load_command_module raises an ImportError with invalid command module."
    with pytest.raises(
        ImportError,
        match="No module named 'viscowave.commands.non_existent_command'",
    ):
        load_command_module("non_existent_command")
