"""Writes the tiny ONNX fixtures used by test_model_backend.

det32.onnx: 32x32 input, constant [1,5,3] output of (cx, cy, w, h, score).
seg32.onnx: 32x32 input, output equals the input (1x1 conv, weight 1).
"""
import sys
from pathlib import Path

import numpy as np
import onnx
from onnx import TensorProto, helper, numpy_helper

S = 32


def save(graph, path):
    model = helper.make_model(graph, opset_imports=[helper.make_opsetid("", 11)])
    model.ir_version = 6
    onnx.checker.check_model(model)
    onnx.save(model, path)


def detector(path):
    boxes = np.array(
        [
            [16.0, 12.0, 8.0, 4.0, 0.9],
            [4.0, 4.0, 4.0, 4.0, 0.0005],  # below the capture floor
            [24.0, 20.0, 6.0, 6.0, 0.4],
        ],
        dtype=np.float32,
    ).T.reshape(-1)  # channels first: [5, 3]
    inits = [
        numpy_helper.from_array(np.zeros((boxes.size, S * S), np.float32), "W"),
        numpy_helper.from_array(boxes, "B"),
        numpy_helper.from_array(np.array([1, 5, 3], np.int64), "shape"),
    ]
    nodes = [
        helper.make_node("Flatten", ["image"], ["flat"], axis=1),
        helper.make_node("Gemm", ["flat", "W", "B"], ["dense"], transB=1),
        helper.make_node("Reshape", ["dense", "shape"], ["boxes"]),
    ]
    graph = helper.make_graph(
        nodes,
        "det",
        [helper.make_tensor_value_info("image", TensorProto.FLOAT, [1, 1, S, S])],
        [helper.make_tensor_value_info("boxes", TensorProto.FLOAT, [1, 5, 3])],
        inits,
    )
    save(graph, path)


def segmenter(path):
    inits = [
        numpy_helper.from_array(np.ones((1, 1, 1, 1), np.float32), "W"),
        numpy_helper.from_array(np.zeros((1,), np.float32), "B"),
    ]
    nodes = [helper.make_node("Conv", ["image", "W", "B"], ["prob"], kernel_shape=[1, 1])]
    graph = helper.make_graph(
        nodes,
        "seg",
        [helper.make_tensor_value_info("image", TensorProto.FLOAT, [1, 1, S, S])],
        [helper.make_tensor_value_info("prob", TensorProto.FLOAT, [1, 1, S, S])],
        inits,
    )
    save(graph, path)


if __name__ == "__main__":
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "tests/data")
    out.mkdir(parents=True, exist_ok=True)
    detector(out / "det32.onnx")
    segmenter(out / "seg32.onnx")
