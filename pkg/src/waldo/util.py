import json
import os
import pathlib


def waldo_base(*paths, debug=False):
    """Get the absolute path to a file in the repository
    @return abs_path <str>
    """
    src_file = pathlib.Path(__file__).absolute()
    if debug:
        print("SRC FILE:", src_file)
    basedir = src_file.parent.parent.parent
    return str(basedir.joinpath(*paths))


def get_version(debug=False):
    """Get the current WALDO version
    @return version <str>
    """
    version_file = waldo_base("VERSION")
    if debug:
        print("VERSION FILE:", version_file)
    with open(version_file, "r") as vfile:
        version = f"v{vfile.read().strip()}"
    return version


def join_jsons(templates):
    """Joins multiple JSON files into one data structure.
    Sections (top-level keys holding objects) are merged key by key, so a later
    file only needs to list the settings it changes.
    @params templates <list[str]>:
        List of JSON files to join together, lowest priority first
    @return aggregated <dict>:
        Dictionary containing the merged contents of all the input JSON files
    """
    aggregated = {}
    for file in templates:
        with open(file, "r") as fh:
            content = json.load(fh)
        for section, values in content.items():
            if isinstance(values, dict) and isinstance(aggregated.get(section), dict):
                aggregated[section].update(values)
            else:
                aggregated[section] = values
    return aggregated


def load_config(*overrides):
    """Load the bundled defaults and apply user override files on top.
    @param overrides <str>:
        Paths to JSON files with the same section layout as config/defaults.json
    @return config <dict>
    """
    files = [waldo_base("config", "defaults.json")]
    files.extend(path for path in overrides if path)
    missing = [path for path in files if not os.path.exists(path)]
    if missing:
        raise FileNotFoundError(f"Config file does not exist: {missing[0]}")
    return join_jsons(files)
