EXAMPLE_CONFIGS = {
    "two-class": {
        "modes": [1, 5],
        "hidden_widths": [50],
        "epochs": 10_000,
        "learning_rate": 0.001,
        "bandwidth": 0.05,
        "resolution": 10,
        "segments": 1,
        "synth_kind": "two-class",
        "synth_per_class": 100,
        "synth_noise": 1.0,
        "synth_length": 36,
    },
    "two-class-fixed": {
        "modes": [1, 5],
        "hidden_widths": [50],
        "epochs": 10_000,
        "learning_rate": 0.001,
        "bandwidth": 0.05,
        "resolution": 10,
        "segments": 1,
        "learn_filtration": False,
        "synth_kind": "two-class",
        "synth_per_class": 100,
        "synth_noise": 1.0,
        "synth_length": 36,
    },
    "three-class": {
        "modes": [1, 2],
        "hidden_widths": [50],
        "epochs": 10_000,
        "learning_rate": 0.01,
        "bandwidth": 0.5,
        "resolution": 10,
        "segments": 3,
        "synth_kind": "three-class",
        "synth_per_class": 50,
        "synth_noise": 1.0,
        "synth_length": 36,
        "grid_learning_rate": [0.01, 0.005],
        "grid_bandwidth": [1.0, 0.5, 0.1],
        "grid_segments": [1, 2, 3],
    },
    "three-class-fixed": {
        "modes": [1, 2],
        "hidden_widths": [50],
        "epochs": 10_000,
        "learning_rate": 0.01,
        "bandwidth": 0.5,
        "resolution": 10,
        "segments": 2,
        "horizon": 3.4641016151377544,
        "initial_directions": [[1.0, 1.0], [1.7320508075688772, 1.0]],
        "learn_filtration": False,
        "synth_kind": "three-class",
        "synth_per_class": 50,
        "synth_noise": 1.0,
        "synth_length": 36,
    },
    "bench": {
        "modes": [1, 2, 3, 4, 5],
        "hidden_widths": [50],
        "epochs": 100,
        "learning_rate": 0.001,
        "bandwidth": 0.05,
        "resolution": 10,
        "segments": 1,
        "synth_kind": "two-class",
        "synth_per_class": 200,
        "synth_noise": 1.0,
        "synth_length": 80,
    },
    "ucr": {
        "modes": [1, 2, 3],
        "hidden_widths": [50, 10],
        "epochs": 10_000,
        "learning_rate": 0.01,
        "bandwidth": 0.5,
        "resolution": 10,
        "segments": 1,
        "grid_learning_rate": [0.01, 0.005],
        "grid_bandwidth": [1.0, 0.5, 0.1],
        "grid_segments": [1, 2, 3, 5],
    },
}

SIMPLE_NAMES = ["two-class", "three-class", "bench", "ucr"]


def available_examples(simple_names=False):
    if simple_names:
        return SIMPLE_NAMES
    else:
        return sorted(list(EXAMPLE_CONFIGS.keys()))


def get_example_config(name):
    if name not in EXAMPLE_CONFIGS:
        raise ValueError(
            f"Unknown example: {name}. Please use one of {available_examples()}"
        )
    return dict(EXAMPLE_CONFIGS[name])
