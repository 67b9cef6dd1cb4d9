# -*- coding: utf-8 -*-
""""""
"""
Created on Mon Mar 11 09:55:03 2024

Shared helpers: config loading, random streams and progress bars
"""
import functools
import logging
import os
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
import yaml
from tqdm import tqdm

from modules.setup_logger import logger


logger = logging.getLogger(__name__)

CONFIG_DIR = Path(__file__).resolve().parent.parent / 'config'


@functools.lru_cache(maxsize=None)
def load_config(filename: str = 'defaults') -> dict:
    """Load settings from yaml

    :param filename: Name of yml file in config folder

    :returns: Nested settings dict
    """
    with open(CONFIG_DIR / f'{filename}.yml', 'r', encoding='utf-8') as stream:
        try:
            return yaml.safe_load(stream) or {}
        except yaml.YAMLError as exc:
            logger.error(exc)
            raise


def settings(section: str, filename: str = 'defaults') -> dict:
    """Get one section of the settings file

    :param section: Section name, e.g. 'drc'
    :param filename: Name of yml file in config folder
    """
    try:
        return load_config(filename)[section]
    except KeyError:
        logger.error("Config section %s not found in %s.yml!", section, filename)
        raise


def make_rng(seed: Optional[int] = None) -> np.random.Generator:
    """Seeded counter-based generator

    :param seed: Root seed, None draws fresh entropy
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def spawn_streams(rng: np.random.Generator, count: int) -> list:
    """Independent child generators, one per trial or worker"""
    return rng.spawn(count)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get('QCUBE_WORKERS', settings('runtime')['workers'])))
    except ValueError:
        logger.warning("QCUBE_WORKERS is not an integer, using 1 worker")
        return 1


def progress(iterable: Iterable, desc: str, total: Optional[int] = None, position: int = 0):
    """tqdm wrapper, only drawn when QCUBE_PROGRESS is set"""
    enabled = os.environ.get('QCUBE_PROGRESS', '') not in ('', '0')
    return tqdm(iterable, desc=desc, total=total, position=position, leave=False, disable=not enabled)
