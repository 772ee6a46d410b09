//! Pure ground-truth functions and content transforms used by the task
//! generators.

pub mod arith;
pub mod graph;
pub mod image;
pub mod text;
pub mod tree;

pub use arith::{
    eval_expression, exact_decimal_product, extract_expression, parse_expression, render_rational, ArithError,
    ArithExpr, Decimal, Op,
};
pub use graph::{shortest_path, GraphError, WeightedGraph};
pub use image::{
    add_gaussian_noise, compose_icon_grid, Icon, IconGrid, IconSet, ImageBuffer, ImageError, ImageSource,
    ProceduralScenes,
};
pub use text::{count_needles, disrupt_words, mask_code, mask_text, TextError};
pub use tree::{format_sequence, postorder_from, BinaryTree, BinaryTreeSpec, TreeError};
