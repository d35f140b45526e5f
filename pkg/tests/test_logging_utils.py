import logging

import pytest

from fl_emph.logging_utils import ConsoleHandler, LevelFormatter, get_logger, level_tag, set_loglevel


@pytest.fixture
def package_logger():
    logger = get_logger()
    level = logger.level
    yield logger
    logger.setLevel(level)


def test_child_loggers_share_the_package_handler(package_logger):
    child = get_logger("learner")
    assert child.name == "fl_emph.learner"
    assert get_logger("fl_emph.data").name == "fl_emph.data"
    assert any(isinstance(h, ConsoleHandler) for h in package_logger.handlers)
    assert not child.handlers


@pytest.mark.parametrize(
    "verbose, quiet, level",
    [
        (None, None, logging.INFO),
        ([1], None, logging.DEBUG),
        ([1, 1, 1], None, logging.DEBUG),
        (None, [1], logging.WARNING),
        (None, [1] * 9, logging.CRITICAL),
        ([1], [1], logging.INFO),
    ],
)
def test_set_loglevel(package_logger, verbose, quiet, level):
    assert set_loglevel(verbose=verbose, quiet=quiet, command="train") == level
    assert package_logger.level == level


def test_level_tags():
    assert level_tag(logging.INFO, color=False) == "[INFO]"
    assert level_tag(logging.WARNING, color=False) == "[WARN]"
    assert level_tag(logging.CRITICAL, color=False) == "[FATAL]"
    assert level_tag(5, color=False) == "[NOTSET]"
    assert level_tag(logging.ERROR).startswith("\x1b[31m[ERROR]")


def test_formatter_leaves_the_record_alone():
    record = logging.LogRecord("fl_emph.x", logging.WARNING, __file__, 1, "loss %s", (0.5,), None)
    line = LevelFormatter(color=False).format(record)
    assert line.endswith("[WARN] loss 0.5")
    assert not hasattr(record, "level_tag")


def test_handler_writes_through_tqdm(capsys):
    handler = ConsoleHandler(color=False)
    handler.emit(logging.LogRecord("fl_emph.x", logging.INFO, __file__, 1, "epoch 3", None, None))
    assert capsys.readouterr().out.rstrip().endswith("[INFO] epoch 3")
