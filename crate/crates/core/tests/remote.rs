use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use syllogic::assistant::{Assistant, HintError, OracleAssistant, RemoteAssistant, RemoteConfig};
use syllogic::kb::KnowledgeBase;
use syllogic::text::render;

fn sample_kb() -> KnowledgeBase {
    KnowledgeBase::from_toml(include_str!("fixtures/sample.kb")).unwrap()
}

/// Serves `n` requests with `answer(request body)` and reports each body.
fn serve(n: usize, answer: impl Fn(&serde_json::Value) -> String + Send + 'static) -> (String, mpsc::Receiver<serde_json::Value>) {
    let server = tiny_http::Server::http("127.0.0.1:0").unwrap();
    let url = format!("http://{}/assist", server.server_addr().to_ip().unwrap());
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for mut req in server.incoming_requests().take(n) {
            let mut body = String::new();
            req.as_reader().read_to_string(&mut body).unwrap();
            let v: serde_json::Value = serde_json::from_str(&body).unwrap();
            let reply = answer(&v);
            tx.send(v).unwrap();
            req.respond(tiny_http::Response::from_string(reply)).unwrap();
        }
    });
    (url, rx)
}

fn config(endpoint: String) -> RemoteConfig {
    RemoteConfig {
        endpoint,
        timeout: Duration::from_secs(5),
    }
}

#[test]
fn remote_answers_match_a_served_oracle() {
    let kb = sample_kb();
    let h = kb.parse("O x5 x1").unwrap();
    let gold = OracleAssistant::new().gold(&kb, h).unwrap();
    let served = kb.clone();
    let (url, rx) = serve(2, move |req| {
        let fs = match req["task"].as_str().unwrap() {
            "premise-selection" => gold.premise_selection.clone(),
            _ => vec![gold.pbc_formula.unwrap()],
        };
        let sentences: Vec<String> = fs.iter().map(|f| render(*f, served.vocab()).unwrap()).collect();
        serde_json::json!({ "sentences": sentences }).to_string()
    });
    let remote = RemoteAssistant::new(config(url));
    let oracle = OracleAssistant::new();
    assert_eq!(
        remote.suggest_premises(&kb, h).unwrap().premises,
        oracle.suggest_premises(&kb, h).unwrap().premises
    );
    assert_eq!(
        remote.suggest_contradiction(&kb, h).unwrap().formula,
        oracle.suggest_contradiction(&kb, h).unwrap().formula
    );
    let req = rx.recv().unwrap();
    assert_eq!(req["schema"], "syllogic-assist/1");
    assert_eq!(req["hypothesis_text"], "Some x5 are not x1");
    assert!(req["kb_text"].as_str().unwrap().starts_with("All x1 are x2. All x2 are x3."));
}

#[test]
fn malformed_and_unreachable_endpoints() {
    let kb = sample_kb();
    let h = kb.parse("A x6 x11").unwrap();
    let (url, _rx) = serve(2, |_| "not json".into());
    let remote = RemoteAssistant::new(config(url));
    assert!(matches!(remote.suggest_premises(&kb, h), Err(HintError::Malformed(_))));

    // Bind then drop to get a port with nothing listening.
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let remote = RemoteAssistant::new(config(format!("http://127.0.0.1:{port}/")));
    assert!(matches!(remote.suggest_premises(&kb, h), Err(HintError::Transport(_))));
}
