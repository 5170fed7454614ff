#include <stdexcept>

#include "composerx/prompts.hpp"

namespace composerx::prompts {

namespace templates {

const char* const kRolePlay =
    "You are a talented musician. Here are some tips for generating melodies:\n"
    "1. The generated melody should have clear phrase divisions, and it's preferable to avoid more than two "
    "consecutive measures within one phrase to prevent an uncomfortable listening experience. There should be a "
    "certain amount of space between phrases, allowing the audience to clearly distinguish between them.\n"
    "2. A phrase usually has a prominent ending note, which is the last note of the entire phrase. It typically has "
    "a longer duration, or it might be followed by a rest. This ending note is usually within the key or the chord, "
    "e.g., phrases ending with a Cmaj chord usually terminate on one of the three chord tones, C, E, or G, ensuring "
    "a stable listening experience.\n"
    "3. When generating melodies, the movement of the notes should primarily consist of stable intervals such as "
    "whole steps, thirds, and fifths, while avoiding excessive large leaps. This will help maintain a sense of logic "
    "and coherence throughout the composition.\n"
    "4. The rhythm of the phrases should be rich and harmonious. Try using different rhythmic patterns to build the "
    "melody, such as combining eighth notes with sixteenth notes, syncopated rhythms, or triplets.";

const char* const kCotStep1 =
    "First, you need to determine all the information related to the piece in the ABC notation format, such as the "
    "name,tune, speed, mode, and anything other than the notes. \n"
    "This forms the basis of the piece's style.***Note that only return the music information in ABC notation "
    "format without any notes or text or Additional note.***";

std::string cot_step2(int bars) {
    return "Second,Based on the song information in the ABC notation format provided earlier, generate a ***" +
           std::to_string(bars) +
           "-bar long*** chord progression and return it in text form, with each bar separated by a \"|\" symbol. "
           "The generated chord progression should be consistent with the song's key and as closely aligned with "
           "the song's theme and characteristics as possible.";
}

std::string cot_step3(int bars) {
    return "Now the chord progression and other information are provided,you are required to create a ***" +
           std::to_string(bars) + "-bar long*** piece of music based on these information.";
}

const char* const kIcl =
    "You are an intelligent agent with musical intelligence, and your goal is to create music that meets the "
    "relevant needs and human listening habits.In this task, use ABC as the format for outputting sheet music."
    "***Only return the ABC notation without any other description or text,and only return one piece that follow "
    "the music description given this time.***Below are the requirements for the music,it contains music elements "
    "like title,genre,key and more,and some composition examples are listed after the requirements.";

const char* const kMelodyAgent =
    "You are a skillful musician, especially in writing melody.\n"
    "You will compose a single-line melody based on the client's request\n"
    "and assigned tasks from the Leader.\n"
    "You must output your work in ABC Notations.\n"
    "Here is a template of a music piece in ABC notation, in this template:\n"
    "  X:1 is the reference number. You can increment this for each new tune.\n"
    "  T:Title is where you'll put the title of your tune.\n"
    "  C:Composer is where you'll put the composer's name.\n"
    "  M:4/4 sets the meter to 4/4 time, but you can change this as needed.\n"
    "  L:1/8 sets the default note length to eighth notes.\n"
    "  K:C sets the key to C Major. Change this to match your desired key.\n"
    "The music notation follows, with |: and :| denoting the beginning\n"
    "and end of repeated sections.\n"
    "Markdown your work using ```    ``` to the client.\n"
    "```\n"
    "X:1\n"
    "T:Title\n"
    "C:Composer\n"
    "M:Meter\n"
    "L:Unit note length\n"
    "K:Key\n"
    "|:GABc d2e2|f2d2 e4|g4 f2e2|d6 z2:|\n"
    "|:c2A2 B2G2|A2F2 G4|E2c2 D2B,2|C6 z2:|\n"
    "```\n"
    "You will output the melody following this template, \n"
    "but decide the time signature, key signature, and the\n"
    "actual musical contents and length yourself.\n"
    "After you receive the feedback from the Reviewer Agent,\n"
    "please improve your work according to the suggestions you were given.";

}  // namespace templates

namespace {

constexpr const char* kAbcFormatNote =
    "Write the complete piece in ABC notation (X, T, M, L and K header lines followed by the notes) and put it "
    "inside a ``` fenced block.";

constexpr const char* kOri = "You are a professional composer. Compose music that follows the user's request.";

constexpr const char* kLeader =
    "You are the leader of a group of musicians who compose a piece together in ABC notation.\n"
    "Read the client's request carefully and break it down into concrete tasks:\n"
    "- For the Melody Agent: key, meter, tempo, length in bars, phrase layout and the character of the tune.\n"
    "- For the Harmony Agent: the chord progression to follow and the kind of accompaniment or counterpoint.\n"
    "- For the Instrument Agent: which instrument plays each voice and its General MIDI program number.\n"
    "State every requirement from the request explicitly (key, bars, chords, instruments, tempo, feeling) "
    "so that no detail is lost. Do not write any music yourself.";

constexpr const char* kHarmonyAgent =
    "You are a skillful musician, especially in harmony and counterpoint.\n"
    "You will add harmonic and contrapuntal voices to the melody written by the Melody Agent, "
    "following the chord progression and tasks assigned by the Leader.\n"
    "You must output your work in ABC Notations, with one V: line per voice. Every voice must have the same "
    "number of bars and every bar must fill the meter exactly.\n"
    "Here is a polyphonic example in ABC notation:\n"
    "```\n"
    "X:1\n"
    "T:Title\n"
    "C:Composer\n"
    "M:4/4\n"
    "L:1/8\n"
    "K:C\n"
    "V:1 name=\"Melody\"\n"
    "|:\"C\"GABc d2e2|\"F\"f2d2 e4|\"C\"g4 f2e2|\"G\"d6 z2:|\n"
    "V:2 name=\"Harmony\"\n"
    "|:E2G2 B2c2|A2B2 c4|e4 d2c2|B6 z2:|\n"
    "```\n"
    "Write chord symbols in double quotes above the melody voice.\n"
    "After you receive the feedback from the Reviewer Agent,\n"
    "please improve your work according to the suggestions you were given.";

constexpr const char* kInstrumentAgent =
    "You are a skillful musician, especially in orchestration and instrumentation.\n"
    "You will assign an instrument to every voice written by the Melody and Harmony Agents, choosing timbres "
    "that suit the request and keeping every note inside the playable range of its instrument.\n"
    "You must output your work in ABC Notations. Name each voice after its instrument and give its General MIDI "
    "program with a %%MIDI program line directly under the V: line.\n"
    "Here is a polyphonic example with MIDI program information in ABC notation:\n"
    "```\n"
    "X:1\n"
    "T:Title\n"
    "C:Composer\n"
    "M:4/4\n"
    "L:1/8\n"
    "K:C\n"
    "V:1 name=\"Violin\"\n"
    "%%MIDI program 40\n"
    "|:\"C\"GABc d2e2|\"F\"f2d2 e4|\"C\"g4 f2e2|\"G\"d6 z2:|\n"
    "V:2 name=\"Cello\"\n"
    "%%MIDI program 42\n"
    "|:C,2E,2 G,2C2|F,2A,2 C4|C,4 D,2E,2|G,6 z2:|\n"
    "```\n"
    "After you receive the feedback from the Reviewer Agent,\n"
    "please improve your work according to the suggestions you were given.";

constexpr const char* kReviewer =
    "You are an experienced music reviewer responsible for quality assurance of the group's work.\n"
    "Review the latest melody, harmony and instrumentation in the conversation and give concrete, actionable "
    "feedback addressed to the Melody, Harmony and Instrument Agents along these dimensions:\n"
    "- Melodic Structure: flow of the melody, development of its themes, variety of pitch and rhythm.\n"
    "- Harmony and Counterpoint: how well the harmony supports the melody, independence of the voices, "
    "quality of the chord progression.\n"
    "- Rhythmic Complexity: whether the rhythm keeps the piece interesting and works with the melody.\n"
    "- Instrumentation and Timbre: instrument choices, how the timbres blend, and whether every note lies in "
    "its instrument's range.\n"
    "- Form and Structure: overall shape, transitions between sections and a convincing ending.\n"
    "Also check the ABC itself: every bar must fill the meter and all voices must have the same number of bars.\n"
    "Do not rewrite the music yourself.";

constexpr const char* kArrangement =
    "You are the arrangement agent. Compile the final versions of the melody, harmony and instrumentation from "
    "the conversation and format the collective output into standardized ABC notation.\n"
    "Return exactly one complete piece in a single ``` fenced block: the header lines (X, T, C, M, L, Q if "
    "known, K), then one V: line per voice with name=\"<instrument>\" followed by its %%MIDI program line and its "
    "music. Keep chord symbols in double quotes in the first voice. Make sure every bar fills the meter and every "
    "voice has the same number of bars.";

std::string render_examples(const std::vector<IclExample>& examples) {
    std::string out;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        out += "\n\nExample " + std::to_string(i + 1) + ":\nDescription: " + examples[i].description +
               "\nABC Notation:\n" + examples[i].abc;
    }
    return out;
}

llm::ChatMessage system_message(std::string content) {
    return {llm::Role::system, std::move(content), std::nullopt};
}

llm::ChatMessage user_message(std::string content) {
    return {llm::Role::user, std::move(content), std::nullopt};
}

llm::ChatMessage assistant_message(std::string content) {
    return {llm::Role::assistant, std::move(content), std::nullopt};
}

}  // namespace

std::string_view to_string(AgentRole role) {
    switch (role) {
        case AgentRole::leader:
            return "leader";
        case AgentRole::melody:
            return "melody";
        case AgentRole::harmony:
            return "harmony";
        case AgentRole::instrument:
            return "instrument";
        case AgentRole::reviewer:
            return "reviewer";
        case AgentRole::arrangement:
            return "arrangement";
        case AgentRole::user_proxy:
            return "user_proxy";
    }
    return "";
}

std::optional<AgentRole> agent_role_from_string(std::string_view text) {
    for (auto role : {AgentRole::leader, AgentRole::melody, AgentRole::harmony, AgentRole::instrument,
                      AgentRole::reviewer, AgentRole::arrangement, AgentRole::user_proxy}) {
        if (to_string(role) == text) return role;
    }
    return std::nullopt;
}

std::vector<llm::ChatMessage> render_single_agent(SingleAgentMethod method, const UserPrompt& prompt,
                                                  const std::vector<std::string>& context,
                                                  const std::vector<IclExample>& examples) {
    const int bars = prompt.attributes.bars.value_or(16);
    switch (method) {
        case SingleAgentMethod::ori:
            return {system_message(std::string(kOri) + "\n" + kAbcFormatNote), user_message(prompt.text)};
        case SingleAgentMethod::role:
            return {system_message(std::string(templates::kRolePlay) + "\n" + kAbcFormatNote),
                    user_message(prompt.text)};
        case SingleAgentMethod::icl:
            if (examples.empty()) throw MissingExamples("ICL prompting needs at least one example");
            return {system_message(std::string(templates::kIcl) + render_examples(examples)),
                    user_message(prompt.text)};
        case SingleAgentMethod::cot_step1:
        case SingleAgentMethod::cot_step2:
        case SingleAgentMethod::cot_step3:
            break;
    }

    const std::size_t needed = method == SingleAgentMethod::cot_step1   ? 0
                               : method == SingleAgentMethod::cot_step2 ? 1
                                                                        : 2;
    if (context.size() < needed) {
        throw MissingContext("CoT step " + std::to_string(needed + 1) + " needs the replies of the previous " +
                             std::to_string(needed) + " step(s)");
    }
    std::vector<llm::ChatMessage> messages = {system_message(templates::kCotStep1), user_message(prompt.text)};
    if (needed >= 1) {
        messages.push_back(assistant_message(context[0]));
        messages.push_back(user_message(templates::cot_step2(bars)));
    }
    if (needed >= 2) {
        messages.push_back(assistant_message(context[1]));
        messages.push_back(user_message(templates::cot_step3(bars) + "\n" + kAbcFormatNote));
    }
    return messages;
}

std::string render_agent_system_prompt(AgentRole role) {
    switch (role) {
        case AgentRole::leader:
            return kLeader;
        case AgentRole::melody:
            return templates::kMelodyAgent;
        case AgentRole::harmony:
            return kHarmonyAgent;
        case AgentRole::instrument:
            return kInstrumentAgent;
        case AgentRole::reviewer:
            return kReviewer;
        case AgentRole::arrangement:
            return kArrangement;
        case AgentRole::user_proxy:
            break;
    }
    throw std::invalid_argument("the user proxy has no system prompt");
}

}  // namespace composerx::prompts
