import os
import sys
import unittest

TESTS_DIR = os.path.dirname(os.path.abspath(__file__))


def run_tests() -> bool:
    suite = unittest.TestLoader().discover(TESTS_DIR, pattern="test_*.py", top_level_dir=TESTS_DIR)
    result = unittest.TextTestRunner(verbosity=2).run(suite)
    return result.wasSuccessful()


def main():
    # insert the package to test at beginning of sys path in
    # case its already installed in site-packages
    source = sys.argv[1] if len(sys.argv) > 1 else "src"
    sys.path.insert(0, os.path.abspath(source))
    sys.path.insert(0, TESTS_DIR)
    sys.exit(0 if run_tests() else 1)


main()
