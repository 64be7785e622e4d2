from setuptools import setup


if __name__ == "__main__":
    setup(use_scm_version={"write_to": "src/toric_quench/_version.py", "fallback_version": "0.1.0"})
