"""Regenerate the bundled demonstration sequences and manifests in src/stml/data."""
from stml.corpus import build, data_dir

if __name__ == "__main__":
    for path in build(data_dir()):
        print(path)
