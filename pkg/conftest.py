# -*- coding: utf-8 -*-

# %% IMPORTS
# Package imports
import matplotlib as mpl
from py.path import local
import _pytest
import pytest


# Set MPL backend
mpl.use('Agg')


# %% PYTEST CUSTOM CONFIGURATION PLUGINS
# This makes the pytest report header mention the tested vesselfcn version
def pytest_report_header(config):
    from vesselfcn.__version__ import __version__
    return("vesselfcn: %s" % (__version__))


# Add the option for running the slow end-to-end experiments
def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="Also run tests marked as slow.")


# Add the slow and incremental markers
def pytest_configure(config):
    config.addinivalue_line("markers", "slow: Runs a full experiment; only "
                            "executed with --runslow.")
    config.addinivalue_line("markers",
                            "incremental: Mark test suite to xfail all "
                            "remaining tests when one fails.")


# This skips all slow tests unless they were requested
def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="Requires --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


# This introduces a marker that auto-fails tests if a previous one failed
def pytest_runtest_makereport(item, call):
    if "incremental" in item.keywords:
        if(call.excinfo is not None and
           call.excinfo.type is not _pytest.outcomes.Skipped):
            parent = item.parent
            parent._previousfailed = item


# This makes every marked test auto-fail if a previous one failed as well
def pytest_runtest_setup(item):
    if "incremental" in item.keywords:
        previousfailed = getattr(item.parent, "_previousfailed", None)
        if previousfailed is not None:
            pytest.xfail("Previous test failed (%s)" % (previousfailed.name))


# %% PYTEST SETTINGS
# Set the current working directory to the temporary directory
local.get_temproot().chdir()
