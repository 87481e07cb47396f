import os
import sys

# make helpers.py importable no matter how pytest is invoked
sys.path.insert(0, os.path.dirname(__file__))
