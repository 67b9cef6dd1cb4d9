# -*- coding: utf-8 -*-
""""""
"""
Created on Mon Mar 11 09:48:12 2024

Shared logging setup. Level can be raised with QCUBE_LOGLEVEL=INFO or DEBUG.
"""

import logging
import os


logging.basicConfig(level=os.environ.get('QCUBE_LOGLEVEL', 'WARNING').upper(),
                    format='%(asctime)s %(name)s %(levelname)s: %(message)s')
logger = logging.getLogger(__name__)
