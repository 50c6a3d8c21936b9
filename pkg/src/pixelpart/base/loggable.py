"""Logging for pixelpart: a context-tagging mixin and command-line setup.

Trainers and experiment runners can be alive several at a time (one per
worker process in a sweep), so their records carry a short key=value tag,
e.g. ``[method=PART_T seed=3] epoch 4 ...``.
"""

import logging
from typing import Any, Mapping, MutableMapping, Tuple

PACKAGE_LOGGER = "pixelpart"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class ContextAdapter(logging.LoggerAdapter):
    """Prefixes each message with the adapter's context as key=value pairs."""

    def process(self, msg: Any, kwargs: MutableMapping[str, Any]) -> Tuple[Any, MutableMapping[str, Any]]:
        if not self.extra:
            return msg, kwargs
        tag = " ".join(f"{key}={value}" for key, value in self.extra.items())
        return f"[{tag}] {msg}", kwargs


class Loggable:
    """Mixin giving instances a logger named after their class.

    Subclasses override log_context() to name the run they belong to; the
    context is read on every access, so it follows changes to the instance.

    Usage:
        class Trainer(Loggable):
            def log_context(self):
                return {"method": self.spec.method.value, "seed": self.spec.seed}

            def run_epoch(self):
                self.logger.info("epoch %d done", epoch)
    """

    def log_context(self) -> Mapping[str, Any]:
        return {}

    @property
    def logger(self) -> ContextAdapter:
        cls = self.__class__
        base = logging.getLogger(f"{cls.__module__}.{cls.__qualname__}")
        return ContextAdapter(base, dict(self.log_context()))


def configure_logging(verbose: bool = False) -> None:
    """Route package records to stderr; DEBUG when verbose, INFO otherwise."""
    logging.basicConfig(format=LOG_FORMAT)
    logging.getLogger(PACKAGE_LOGGER).setLevel(logging.DEBUG if verbose else logging.INFO)
