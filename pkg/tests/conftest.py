import os
import sys

# tests import `equimid` from the src layout without requiring `pip install -e .`
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..", "src")))
