//! Build the request body an HTTP backend would send. The credential is
//! read from the environment variable named in the config.

use evalnet::backend::{ChatMessage, ChatRequest, HttpBackend, HttpConfig};

fn main() {
    let var = "EVALNET_EXAMPLE_KEY";
    if std::env::var(var).is_err() {
        std::env::set_var(var, "not-a-real-key");
    }
    let config = HttpConfig {
        endpoint: "http://localhost:8000/v1/chat/completions".into(),
        model: "local-model".into(),
        api_key_env: Some(var.into()),
        max_new_tokens: Some(512),
        ..HttpConfig::default()
    };
    let backend = HttpBackend::new("local", config, None).unwrap();
    let req = ChatRequest::new(
        "local-model",
        vec![
            ChatMessage::system("You are a careful solver."),
            ChatMessage::user("What is 2 + 2?"),
        ],
    );
    println!(
        "{}",
        serde_json::to_string_pretty(&backend.body(&req).unwrap()).unwrap()
    );
}
