"""Configuration schema: INI sections, typed defaults, CLI overrides.

Every key lives in a section, has a typed default, and can be overridden
either from an INI file or with a ``--section.key value`` flag. Unknown
sections or keys are errors rather than silent noise.
"""

from __future__ import annotations

import configparser
import copy
import os

from ..errors import ConfigError
from ..scopes import SCOPE_KINDS


def _csv_ints(raw: str) -> tuple:
    return tuple(int(tok) for tok in str(raw).split(",") if tok.strip())


def _csv_strs(raw: str) -> tuple:
    return tuple(tok.strip() for tok in str(raw).split(",") if tok.strip())


def _bool(raw) -> bool:
    if isinstance(raw, bool):
        return raw
    text = str(raw).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {raw!r}")


# section -> key -> (parser, default)
CONFIG_SCHEMA = {
    "data": {
        "name": (str, ""),
        "path": (str, ""),
        "format": (str, "tsv"),  # tsv|csv|double_colon|snapshot|synthetic
        "rating_threshold": (float, 3.0),
        "min_degree": (int, 3),
        "val_ratio": (float, 0.1),
        "test_ratio": (float, 0.1),
        "split_seed": (int, 0),
        "synth_users": (int, 300),
        "synth_items": (int, 120),
        "synth_clusters": (int, 6),
        "synth_mean_degree": (float, 12.0),
        "synth_seed": (int, 0),
    },
    "recommender": {
        "kind": (str, "mf"),  # mf|lightgcn
        "dim": (int, 32),
        "num_layers": (int, 2),
        "lr": (float, 0.05),
        "reg": (float, 1e-4),
        "max_epochs": (int, 200),
        "patience": (int, 20),
        "val_k": (int, 20),
        "train_seed": (int, 0),
        "checkpoint": (str, ""),
    },
    "eval": {
        "k_values": (_csv_ints, (3, 5)),
        "t_steps": (int, 10),
        "levels": (_csv_strs, ("item", "list")),
        "n_eval_users": (int, 500),
        "min_history": (int, 1),
        "eval_seed": (int, 0),
        "explainer_seed": (int, 0),
        "scope": (str, "full"),  # full|khop|indirect|useronly
        "hops": (int, 0),  # 0 -> the model's layer count
        "explainers": (_csv_strs, ("random",)),
        "out_dir": (str, "runs"),
    },
    "lime": {
        "n_samples": (int, 200),
        "keep_prob": (float, 0.8),
        "kernel_width": (float, 0.0),
        "ridge_alpha": (float, 1.0),
    },
    "shap": {
        "n_permutations": (int, 32),
        "exact_limit": (int, 12),
    },
    "prince": {
        "alpha": (float, 0.15),
        "max_removals": (int, 0),
    },
    "accent": {
        "max_removals": (int, 0),
    },
    "lxr": {
        "hidden_dim": (int, 64),
        "epochs": (int, 100),
        "lr": (float, 0.01),
        "lambda_pos": (float, 1.0),
        "lambda_neg": (float, 1.0),
        "l1": (float, 0.05),
        "threshold": (float, 0.5),
        "seed": (int, 0),
        "train_users": (int, 100),
    },
    "cf_mask": {
        "steps": (int, 100),
        "lr": (float, 0.1),
        "beta": (float, 0.5),
        "margin_frac": (float, 0.01),
        "threshold": (float, 0.5),
    },
    "unr": {
        "n_iterations": (int, 200),
        "c_uct": (float, 1.4),
        "max_size": (int, 5),
    },
    "grid": {
        "n_users": (int, 50),
        "seed": (int, 999),
    },
}

# external spellings for the scope enum, per the CLI contract
_SCOPE_ALIASES = {
    "full": "full",
    "khop": "k_hop",
    "k_hop": "k_hop",
    "indirect": "indirect",
    "useronly": "user_only",
    "user_only": "user_only",
}


def resolve_scope_kind(raw: str) -> str:
    kind = _SCOPE_ALIASES.get(str(raw).strip().lower())
    if kind is None or kind not in SCOPE_KINDS:
        raise ConfigError(
            f"unknown scope {raw!r}, expected one of full|khop|indirect|useronly"
        )
    return kind


def default_config() -> dict:
    return {
        section: {key: copy.copy(default) for key, (_, default) in keys.items()}
        for section, keys in CONFIG_SCHEMA.items()
    }


def _set_key(cfg: dict, section: str, key: str, raw) -> None:
    if section not in CONFIG_SCHEMA:
        raise ConfigError(f"unknown config section [{section}]")
    if key not in CONFIG_SCHEMA[section]:
        raise ConfigError(f"unknown config key {section}.{key}")
    parser, _ = CONFIG_SCHEMA[section][key]
    try:
        cfg[section][key] = parser(raw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {section}.{key}: {raw!r}") from exc


def load_config(path: str | None = None) -> dict:
    """Defaults merged with an optional INI file."""
    cfg = default_config()
    if path:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        ini = configparser.ConfigParser()
        try:
            ini.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config {path}: {exc}") from exc
        for section in ini.sections():
            for key, raw in ini.items(section):
                _set_key(cfg, section, key, raw)
    return cfg


def apply_overrides(cfg: dict, pairs) -> dict:
    """Apply ``section.key=value`` strings on top of a config, in order."""
    for pair in pairs or ():
        if "=" not in pair:
            raise ConfigError(f"override must look like section.key=value: {pair!r}")
        dotted, raw = pair.split("=", 1)
        if "." not in dotted:
            raise ConfigError(f"override key must be section.key: {dotted!r}")
        section, key = dotted.split(".", 1)
        _set_key(cfg, section.strip(), key.strip(), raw.strip())
    return cfg


def write_resolved_config(cfg: dict, path: str) -> None:
    """Dump the fully resolved config as INI for reproducibility."""
    ini = configparser.ConfigParser()
    for section, keys in cfg.items():
        ini[section] = {}
        for key, value in keys.items():
            if isinstance(value, (tuple, list)):
                ini[section][key] = ",".join(str(v) for v in value)
            else:
                ini[section][key] = str(value)
    with open(path, "w", encoding="utf-8") as fh:
        ini.write(fh)
