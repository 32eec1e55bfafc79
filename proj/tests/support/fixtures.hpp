#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sabia/embed.hpp"
#include "sabia/vstore.hpp"

namespace sabia::test {

/// Store holding one chunk per (doc_id, text), embedded by `embedder`.
inline std::shared_ptr<VectorStore> store_of(const Embedder& embedder,
                                             const std::vector<std::pair<std::string, std::string>>& chunks) {
  auto store = std::make_shared<VectorStore>(embedder.dim(), embedder.id());
  std::vector<VectorRecord> batch;
  std::vector<std::string> texts;
  for (const auto& [doc, text] : chunks) texts.push_back(text);
  const auto embeddings = texts.empty() ? std::vector<Embedding>{} : embedder.embed(texts);
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    VectorRecord r;
    r.chunk.doc_id = chunks[i].first;
    r.chunk.chunk_index = 0;
    r.chunk.text = chunks[i].second;
    r.chunk.span = {0, chunks[i].second.size()};
    r.embedding = embeddings[i];
    batch.push_back(std::move(r));
  }
  store->upsert(std::move(batch));
  return store;
}

/// A judge reply carrying the five rubric scores.
inline std::string verdict_reply(int relevancia, int acuracia, int completude, int clareza, int concisao,
                                 const std::string& rationale = "ok") {
  return "{\"relevancia\": " + std::to_string(relevancia) + ", \"acuracia\": " + std::to_string(acuracia) +
         ", \"completude\": " + std::to_string(completude) + ", \"clareza\": " + std::to_string(clareza) +
         ", \"concisao\": " + std::to_string(concisao) + ", \"rationale\": \"" + rationale + "\"}";
}

/// Ten short Portuguese chunks about academic rules, one per document.
inline std::vector<std::pair<std::string, std::string>> ten_chunks() {
  return {
      {"matricula.md", "A matrícula é feita no portal do estudante no início de cada semestre."},
      {"trancamento.md", "O trancamento de curso pode ser solicitado até a metade do período letivo."},
      {"estagio.md", "O estágio obrigatório exige termo de compromisso assinado pela empresa."},
      {"tcc.md", "O trabalho de conclusão de curso é defendido perante banca de três professores."},
      {"frequencia.md", "A frequência mínima exigida em cada disciplina é de setenta e cinco por cento."},
      {"notas.md", "A média para aprovação direta é sete e o exame final exige média cinco."},
      {"biblioteca.md", "A biblioteca empresta até cinco livros por quinze dias com renovação online."},
      {"bolsas.md", "As bolsas de iniciação científica são concedidas por edital anual."},
      {"diploma.md", "O diploma é emitido pela secretaria acadêmica após a colação de grau."},
      {"horas.md", "As atividades complementares somam duzentas horas ao longo do curso."},
  };
}

}  // namespace sabia::test
